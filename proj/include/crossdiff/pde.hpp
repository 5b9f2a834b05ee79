#pragma once

#include <functional>
#include <string>
#include <vector>

#include "crossdiff/field.hpp"
#include "crossdiff/kernel.hpp"
#include "crossdiff/model.hpp"

namespace crossdiff {

enum class Reconstruction {
  first_order,  ///< donor-cell upwind
  minmod,       ///< minmod-limited linear reconstruction, still upwinded
};

struct SolverConfig {
  GridSpec grid;
  double dt = 0.0;  ///< <= 0 selects suggest_dt()
  double cfl_safety = 0.5;
  int output_every = 1;
  Reconstruction reconstruction = Reconstruction::minmod;
  /// Abort when the mass fraction outside the central 80% of the box exceeds this.
  double boundary_mass_limit = 1e-4;

  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

/// Snapshots of n fields at uniformly spaced output times (including t = 0).
struct FieldTrajectory {
  std::vector<double> times;
  std::vector<std::vector<ScalarField>> snapshots;
  double dt = 0.0;  ///< solver step
  int output_every = 1;
  std::size_t steps = 0;
  double clamp_defect = 0.0;  ///< total mass removed by clamping tiny negatives

  std::size_t size() const { return times.size(); }
  const std::vector<ScalarField>& back() const { return snapshots.back(); }
};

/// sum_l a_l f_l pointwise.
ScalarField weighted_sum(const std::vector<ScalarField>& fields, const std::vector<double>& a);

/// max(f, 0)^exponent pointwise.
ScalarField power(const ScalarField& f, double exponent);

/// (sum_l a_l V^eps * rho_l)^(m-1), the field whose grad V^eps-convolution
/// drives the nonlocal system.
ScalarField nonlocal_pressure(const std::vector<ScalarField>& rho, const ModelParams& params,
                              const Mollifier& mol);

enum class Level { nonlocal, local };

/// Fixed step from the stability bound at t = 0, with a margin for growth of
/// the velocity and the pressure.
double suggest_dt(Level level, const ModelParams& params, const std::vector<ScalarField>& rho0,
                  const SolverConfig& cfg);

/// Largest step allowed for a face speed and a diffusivity. The diffusivity
/// is sigma plus b (m-1) max P: the pressure-driven flux acts as a
/// nonlinear diffusion with that coefficient.
double stable_dt(const GridSpec& grid, double diffusivity, double vmax, double cfl_safety);

FieldTrajectory solve_nonlocal(const ModelParams& params, const std::vector<ScalarField>& rho0,
                               const SolverConfig& cfg);
FieldTrajectory solve_local(const ModelParams& params, const std::vector<ScalarField>& rho0,
                            const SolverConfig& cfg);
/// Viscous porous medium equation d/dt u = b div(u grad u^(m-1)) + sigma lap u.
FieldTrajectory solve_pme(double b, double sigma, double m, const ScalarField& u0, double horizon,
                          const SolverConfig& cfg);
/// Linear Fokker-Planck equation with a frozen pressure: `pressure` holds
/// u^(m-1) at every solver step (output_every = 1), on the same step size.
FieldTrajectory solve_fokker_planck(double b, double sigma, const FieldTrajectory& pressure,
                                    const std::vector<ScalarField>& rho0, const SolverConfig& cfg);

/// Exact solution of d/dt u = sigma lap u on R^d for grid data: spectral
/// multiplication by exp(-sigma t |k|^2) on a zero-padded grid.
ScalarField heat_exact(const ScalarField& rho0, double sigma, double t);

/// Grid initial data: exact cell averages of each species' density.
std::vector<ScalarField> project_initial(const std::vector<InitialDensity>& densities,
                                         const GridSpec& grid);

/// Test function f(t, x) with analytic derivatives.
struct TestFunction {
  std::string name;
  std::function<double(double, const Point&)> value;
  std::function<double(double, const Point&)> time_derivative;
  std::function<Point(double, const Point&)> gradient;
  std::function<double(double, const Point&)> laplacian;
};

TestFunction constant_test_function(double c = 1.0);
TestFunction coordinate_test_function(int axis);
/// Polynomials times Gaussians centred at `center`, one of them time dependent.
std::vector<TestFunction> test_function_library(int dim, const Point& center, double width);

/// |LHS - RHS| of the weak formulation for species k at the final time of
/// the trajectory, quadrature in space and trapezoid in time. With `mol`
/// the drift potential is g^eps (nonlocal system), otherwise the local
/// pressure with centred differences.
std::vector<double> weak_form_residual(const FieldTrajectory& traj, const ModelParams& params,
                                       int species, const std::vector<TestFunction>& tests,
                                       const Mollifier* mol = nullptr);

/// Writes one grid file per (snapshot, field) into `dir` and an index CSV
/// with columns step,time,filename. Returns the index path.
std::string write_trajectory(const std::string& dir, const std::string& prefix,
                             const FieldTrajectory& traj);

}  // namespace crossdiff
