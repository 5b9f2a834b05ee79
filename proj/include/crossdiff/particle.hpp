#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "crossdiff/field.hpp"
#include "crossdiff/kernel.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/noise.hpp"
#include "crossdiff/pde.hpp"

namespace crossdiff {

/// N particles per species. `keys` name each particle in the noise stream,
/// so a particle keeps its Brownian path under permutation.
struct Ensemble {
  ModelParams params;
  std::vector<std::vector<Point>> positions;
  std::vector<std::vector<std::uint32_t>> keys;
  double time = 0.0;
  std::uint32_t step = 0;
  std::uint32_t replica = 0;

  std::size_t particles_per_species() const { return positions.empty() ? 0 : positions[0].size(); }
  /// Equal counts in every species, matching keys, positions inside `box`.
  void validate(const Box& box) const;
};

/// Samples xi_k^i for every species (keys 0..N-1).
Ensemble make_ensemble(const ModelParams& params, const std::vector<InitialSampler>& samplers,
                       std::size_t n, const NoiseStream& noise, std::uint32_t replica);

using Drift = std::vector<std::vector<Point>>;

/// grad V^eps * (sum_l a_l u_l)^(m-1) at cell centres.
VectorField interaction_field(const std::vector<ScalarField>& u, const ModelParams& params,
                              const Mollifier& mol);

/// -b_k * field(X_k^i).
Drift drift_from_field(const VectorField& field, const std::vector<std::vector<Point>>& positions,
                       const ModelParams& params);

/// Drift of the interacting system: deposit every species, then the shared
/// pipeline.
Drift particle_drift(const Ensemble& ens, const Mollifier& mol, const GridSpec& grid);

/// Drift of the McKean-Vlasov process with u_l = V^eps * rho_l^eps.
Drift meanfield_drift(const std::vector<std::vector<Point>>& positions,
                      const std::vector<ScalarField>& rho_eps, const ModelParams& params,
                      const Mollifier& mol);

/// X <- X + drift dt + sqrt(2 sigma dt) xi, xi keyed by (replica, species,
/// particle key, step). Throws BoundaryEscape when a particle leaves `box`.
void em_step(Ensemble& ens, const Drift& drift, double dt, const NoiseStream& noise, const Box& box);
/// Interacting-system step with the drift computed from the ensemble.
void em_step(Ensemble& ens, double dt, const NoiseStream& noise, const Mollifier& mol,
             const GridSpec& grid);

/// Synchronously coupled pair: identical initial data and Brownian
/// increments; Y is driven by a frozen mean-field interaction field.
struct CoupledState {
  Ensemble x;
  Ensemble y;
  VectorField y_field;  ///< interaction field of the nonlocal PDE at the current step
};

CoupledState make_coupled(const Ensemble& initial);

/// Advances both ensembles by one step with the same Gaussian draws.
void em_step(CoupledState& state, double dt, const NoiseStream& noise, const Mollifier& mol,
             const GridSpec& grid);

/// Mean-field interaction fields for every snapshot of a nonlocal trajectory.
std::vector<VectorField> meanfield_fields(const FieldTrajectory& rho_eps, const ModelParams& params,
                                          const Mollifier& mol);

struct CoupledResult {
  double statistic = 0.0;              ///< sum_k max_s mean_i |X - Y|^2
  std::vector<double> per_species;     ///< max_s mean_i |X_k - Y_k|^2
  std::vector<double> times;           ///< particle step times 0..T
  std::vector<double> distance_series; ///< sum_k mean_i |X - Y|^2 per time
};

/// One replica of the coupling experiment. `fields[s]` must be the
/// mean-field interaction field at time s*dt for s = 0..steps-1 and
/// `times` their times.
CoupledResult run_coupled(const ModelParams& params, const std::vector<InitialSampler>& samplers,
                          std::size_t n, double dt, const NoiseStream& noise, std::uint32_t replica,
                          const std::vector<VectorField>& fields, const std::vector<double>& times,
                          const Mollifier& mol, const GridSpec& grid);

/// Convenience overload computing the mean-field fields from the trajectory.
CoupledResult run_coupled(const ModelParams& params, const std::vector<InitialSampler>& samplers,
                          std::size_t n, double dt, const NoiseStream& noise, std::uint32_t replica,
                          const FieldTrajectory& rho_eps, const Mollifier& mol, const GridSpec& grid);

/// Interacting system alone, integrated from t = 0 to params.horizon.
Ensemble run_interacting(const ModelParams& params, const std::vector<InitialSampler>& samplers,
                         std::size_t n, double dt, const NoiseStream& noise, std::uint32_t replica,
                         const Mollifier& mol, const GridSpec& grid);

/// Particle dump rows: replica,species,particle,step,time,x1[,x2].
void write_particle_header(std::ostream& out, int dim);
void write_particles(std::ostream& out, const Ensemble& ens);

}  // namespace crossdiff
