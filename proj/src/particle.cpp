#include "crossdiff/particle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "crossdiff/error.hpp"

namespace crossdiff {

void Ensemble::validate(const Box& box) const {
  if (static_cast<int>(positions.size()) != params.n_species || keys.size() != positions.size())
    throw ConfigError("ensemble: species count does not match the model");
  const std::size_t n = particles_per_species();
  for (std::size_t k = 0; k < positions.size(); ++k) {
    if (positions[k].size() != n) throw ConfigError("ensemble: species hold different particle counts");
    if (keys[k].size() != n) throw ConfigError("ensemble: key count differs from particle count");
    for (const auto& x : positions[k])
      if (!box.contains(x, params.dim)) throw BoundaryEscape("ensemble: particle outside the domain box");
  }
}

Ensemble make_ensemble(const ModelParams& params, const std::vector<InitialSampler>& samplers,
                       std::size_t n, const NoiseStream& noise, std::uint32_t replica) {
  params.validate();
  if (static_cast<int>(samplers.size()) != params.n_species)
    throw ConfigError("make_ensemble: need one sampler per species");
  Ensemble ens;
  ens.params = params;
  ens.replica = replica;
  for (std::size_t k = 0; k < samplers.size(); ++k) {
    ens.positions.push_back(samplers[k].sample(n, noise, replica, static_cast<std::uint32_t>(k)));
    std::vector<std::uint32_t> keys(n);
    for (std::size_t i = 0; i < n; ++i) keys[i] = static_cast<std::uint32_t>(i);
    ens.keys.push_back(std::move(keys));
  }
  return ens;
}

VectorField interaction_field(const std::vector<ScalarField>& u, const ModelParams& params,
                              const Mollifier& mol) {
  const ScalarField p = power(weighted_sum(u, params.a), params.m_exponent - 1.0);
  return convolve_gradient(p, mol, Placement::centers);
}

Drift drift_from_field(const VectorField& field, const std::vector<std::vector<Point>>& positions,
                       const ModelParams& params) {
  Drift out(positions.size());
  for (std::size_t k = 0; k < positions.size(); ++k) {
    const double b = params.b[k];
    out[k].resize(positions[k].size(), Point{0.0, 0.0});
    if (b == 0.0) continue;
    for (std::size_t i = 0; i < positions[k].size(); ++i) {
      const Point g = interpolate(field, positions[k][i]);
      out[k][i] = {-b * g[0], -b * g[1]};
    }
  }
  return out;
}

namespace {

bool driftless(const ModelParams& params) {
  return std::all_of(params.b.begin(), params.b.end(), [](double b) { return b == 0.0; });
}

Drift zero_drift(const std::vector<std::vector<Point>>& positions) {
  Drift out(positions.size());
  for (std::size_t k = 0; k < positions.size(); ++k) out[k].assign(positions[k].size(), Point{0.0, 0.0});
  return out;
}

}  // namespace

Drift particle_drift(const Ensemble& ens, const Mollifier& mol, const GridSpec& grid) {
  if (driftless(ens.params)) return zero_drift(ens.positions);
  std::vector<ScalarField> u;
  u.reserve(ens.positions.size());
  for (const auto& species : ens.positions) u.push_back(deposit(species, mol, grid));
  return drift_from_field(interaction_field(u, ens.params, mol), ens.positions, ens.params);
}

Drift meanfield_drift(const std::vector<std::vector<Point>>& positions,
                      const std::vector<ScalarField>& rho_eps, const ModelParams& params,
                      const Mollifier& mol) {
  if (rho_eps.size() != positions.size()) throw ConfigError("meanfield_drift: one field per species required");
  std::vector<ScalarField> u;
  u.reserve(rho_eps.size());
  for (const auto& r : rho_eps) u.push_back(convolve(r, mol));
  return drift_from_field(interaction_field(u, params, mol), positions, params);
}

void em_step(Ensemble& ens, const Drift& drift, double dt, const NoiseStream& noise, const Box& box) {
  if (!(dt > 0.0)) throw StepSizeError("em_step: dt must be positive");
  if (drift.size() != ens.positions.size()) throw ConfigError("em_step: drift has the wrong species count");
  const int dim = ens.params.dim;
  const double amp = std::sqrt(2.0 * ens.params.sigma * dt);
  for (std::size_t k = 0; k < ens.positions.size(); ++k) {
    auto& xs = ens.positions[k];
    if (drift[k].size() != xs.size()) throw ConfigError("em_step: drift has the wrong particle count");
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto [z0, z1] = noise.normal2({ens.replica, static_cast<std::uint32_t>(k), ens.keys[k][i],
                                           ens.step, Purpose::brownian});
      Point& x = xs[i];
      x[0] += drift[k][i][0] * dt + amp * z0;
      if (dim > 1) x[1] += drift[k][i][1] * dt + amp * z1;
      if (!box.contains(x, dim)) {
        std::ostringstream msg;
        msg << "particle " << ens.keys[k][i] << " of species " << k << " left the box at step "
            << ens.step + 1;
        throw BoundaryEscape(msg.str());
      }
    }
  }
  ++ens.step;
  ens.time += dt;
}

void em_step(Ensemble& ens, double dt, const NoiseStream& noise, const Mollifier& mol,
             const GridSpec& grid) {
  em_step(ens, particle_drift(ens, mol, grid), dt, noise, grid.box);
}

CoupledState make_coupled(const Ensemble& initial) { return {initial, initial, VectorField{}}; }

void em_step(CoupledState& state, double dt, const NoiseStream& noise, const Mollifier& mol,
             const GridSpec& grid) {
  if (state.x.replica != state.y.replica || state.x.step != state.y.step || state.x.keys != state.y.keys)
    throw ConfigError("coupled step: X and Y no longer share their noise keys");
  const Drift dx = particle_drift(state.x, mol, grid);
  Drift dy;
  if (driftless(state.y.params)) {
    dy = zero_drift(state.y.positions);
  } else {
    if (!(state.y_field.grid == grid) || state.y_field.components[0].size() != grid.size())
      throw ConfigError("coupled step: mean-field interaction field is missing or on another grid");
    dy = drift_from_field(state.y_field, state.y.positions, state.y.params);
  }
  em_step(state.x, dx, dt, noise, grid.box);
  em_step(state.y, dy, dt, noise, grid.box);
}

std::vector<VectorField> meanfield_fields(const FieldTrajectory& rho_eps, const ModelParams& params,
                                          const Mollifier& mol) {
  std::vector<VectorField> out;
  out.reserve(rho_eps.size());
  for (const auto& snap : rho_eps.snapshots) {
    std::vector<ScalarField> u;
    for (const auto& r : snap) u.push_back(convolve(r, mol));
    out.push_back(interaction_field(u, params, mol));
  }
  return out;
}

namespace {

std::size_t count_steps(double horizon, double dt) {
  if (!(dt > 0.0)) throw StepSizeError("particle dt must be positive");
  const double ratio = horizon / dt;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (steps == 0 || std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio))
    throw ConfigError("particle dt must divide the horizon");
  return steps;
}

}  // namespace

CoupledResult run_coupled(const ModelParams& params, const std::vector<InitialSampler>& samplers,
                          std::size_t n, double dt, const NoiseStream& noise, std::uint32_t replica,
                          const std::vector<VectorField>& fields, const std::vector<double>& times,
                          const Mollifier& mol, const GridSpec& grid) {
  const std::size_t steps = count_steps(params.horizon, dt);
  const bool frozen_free = driftless(params);
  if (!frozen_free) {
    if (fields.size() < steps || times.size() < steps)
      throw ConfigError("run_coupled: mean-field trajectory is shorter than the particle run");
    for (std::size_t s = 0; s < steps; ++s)
      if (std::abs(times[s] - static_cast<double>(s) * dt) > 1e-9)
        throw ConfigError("run_coupled: mean-field trajectory times do not match the particle steps");
  }

  CoupledState state = make_coupled(make_ensemble(params, samplers, n, noise, replica));
  state.x.validate(grid.box);
  const std::size_t ns = params.n_species;
  CoupledResult res;
  res.per_species.assign(ns, 0.0);
  res.times.push_back(0.0);
  res.distance_series.push_back(0.0);
  for (std::size_t s = 0; s < steps; ++s) {
    if (!frozen_free) state.y_field = fields[s];
    em_step(state, dt, noise, mol, grid);
    double total = 0.0;
    for (std::size_t k = 0; k < ns; ++k) {
      const auto& xs = state.x.positions[k];
      const auto& ys = state.y.positions[k];
      double acc = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const Point d{xs[i][0] - ys[i][0], xs[i][1] - ys[i][1]};
        acc += norm_sq(d, params.dim);
      }
      const double mean = acc / static_cast<double>(xs.size());
      res.per_species[k] = std::max(res.per_species[k], mean);
      total += mean;
    }
    res.times.push_back(static_cast<double>(s + 1) * dt);
    res.distance_series.push_back(total);
  }
  for (double v : res.per_species) res.statistic += v;
  return res;
}

CoupledResult run_coupled(const ModelParams& params, const std::vector<InitialSampler>& samplers,
                          std::size_t n, double dt, const NoiseStream& noise, std::uint32_t replica,
                          const FieldTrajectory& rho_eps, const Mollifier& mol, const GridSpec& grid) {
  const std::size_t steps = count_steps(params.horizon, dt);
  std::vector<VectorField> all = meanfield_fields(rho_eps, params, mol);
  std::vector<VectorField> fields;
  std::vector<double> times;
  std::size_t j = 0;
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * dt;
    while (j < rho_eps.size() && rho_eps.times[j] < t - 1e-9) ++j;
    if (j == rho_eps.size() || std::abs(rho_eps.times[j] - t) > 1e-9)
      throw ConfigError("run_coupled: trajectory has no snapshot at a particle step time");
    fields.push_back(all[j]);
    times.push_back(rho_eps.times[j]);
  }
  return run_coupled(params, samplers, n, dt, noise, replica, fields, times, mol, grid);
}

Ensemble run_interacting(const ModelParams& params, const std::vector<InitialSampler>& samplers,
                         std::size_t n, double dt, const NoiseStream& noise, std::uint32_t replica,
                         const Mollifier& mol, const GridSpec& grid) {
  const std::size_t steps = count_steps(params.horizon, dt);
  Ensemble ens = make_ensemble(params, samplers, n, noise, replica);
  ens.validate(grid.box);
  for (std::size_t s = 0; s < steps; ++s) em_step(ens, dt, noise, mol, grid);
  return ens;
}

void write_particle_header(std::ostream& out, int dim) {
  out << "replica,species,particle,step,time,x1";
  if (dim > 1) out << ",x2";
  out << '\n';
}

void write_particles(std::ostream& out, const Ensemble& ens) {
  const auto old = out.precision(17);
  for (std::size_t k = 0; k < ens.positions.size(); ++k) {
    for (std::size_t i = 0; i < ens.positions[k].size(); ++i) {
      const Point& x = ens.positions[k][i];
      out << ens.replica << ',' << k << ',' << ens.keys[k][i] << ',' << ens.step << ',' << ens.time << ','
          << x[0];
      if (ens.params.dim > 1) out << ',' << x[1];
      out << '\n';
    }
  }
  out.precision(old);
}

}  // namespace crossdiff
