#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "crossdiff/analysis.hpp"
#include "crossdiff/error.hpp"
#include "crossdiff/particle.hpp"

using namespace crossdiff;

namespace {

const GridSpec grid256{1, 256, {-2.0, 3.0}};

InitialDensity gaussian(double mean, double sd) {
  return InitialDensity(1, {-2.0, 3.0}, GaussianMixture{{1.0}, {{mean, 0.0}}, {sd}});
}

std::vector<InitialSampler> samplers() { return {InitialSampler(gaussian(0.2, 0.3)), InitialSampler(gaussian(0.8, 0.3))}; }

ModelParams params(double horizon = 0.1) {
  ModelParams p;
  p.horizon = horizon;
  p.b = {1.0, 2.0};
  p.a = {1.0, 0.5};
  return p;
}

// -b_k (grad V * (sum_l a_l mu_l * V)^(m-1))(x) by midpoint quadrature on
// the support of grad V(x - .), with exact kernel values.
double brute_force_drift(double x, const std::vector<std::vector<Point>>& pos, const ModelParams& p,
                         const Mollifier& mol, int k) {
  const double eps = mol.eps();
  constexpr int nodes = 20000;
  const double w = 2.0 * eps / nodes;
  double sum = 0.0;
  for (int j = 0; j < nodes; ++j) {
    const double y = x - eps + (j + 0.5) * w;
    double u = 0.0;
    for (std::size_t l = 0; l < pos.size(); ++l) {
      double ul = 0.0;
      for (const auto& z : pos[l]) ul += mol.value({y - z[0], 0.0});
      u += p.a[l] * ul / static_cast<double>(pos[l].size());
    }
    sum += mol.gradient({x - y, 0.0})[0] * std::pow(u, p.m_exponent - 1.0) * w;
  }
  return -p.b[k] * sum;
}

// Nonlocal solve whose snapshots fall on every particle step.
FieldTrajectory aligned_nonlocal(const ModelParams& p, double particle_dt) {
  SolverConfig cfg;
  cfg.grid = grid256;
  const auto rho0 = project_initial({gaussian(0.2, 0.3), gaussian(0.8, 0.3)}, grid256);
  const int stride = static_cast<int>(std::ceil(particle_dt / suggest_dt(Level::nonlocal, p, rho0, cfg)));
  cfg.dt = particle_dt / stride;
  cfg.output_every = stride;
  return solve_nonlocal(p, rho0, cfg);
}

}  // namespace

TEST_CASE("make_ensemble draws reproducible positions with sequential keys") {
  const NoiseStream noise(11);
  const auto s = samplers();
  const Ensemble a = make_ensemble(params(), s, 100, noise, 3);
  const Ensemble b = make_ensemble(params(), s, 100, noise, 3);
  const Ensemble c = make_ensemble(params(), s, 100, noise, 4);
  CHECK(a.positions == b.positions);
  CHECK(a.positions != c.positions);
  CHECK(a.keys[1][57] == 57);
  a.validate(grid256.box);
  CHECK_THROWS_AS(make_ensemble(params(), {s[0]}, 10, noise, 0), ConfigError);
}

TEST_CASE("a lone particle at a cell centre feels no drift") {
  ModelParams p = params();
  p.n_species = 1;
  p.a = {1.0};
  p.b = {1.0};
  Ensemble ens;
  ens.params = p;
  ens.positions = {{grid256.center(120)}};
  ens.keys = {{0}};
  const Drift d = particle_drift(ens, Mollifier(1, 0.4), grid256);
  CHECK(std::abs(d[0][0][0]) < 1e-10);
}

TEST_CASE("grid drift agrees with brute-force quadrature at N = 8") {
  const ModelParams p = params();
  const Mollifier mol(1, p.eps);
  const Ensemble ens = make_ensemble(p, samplers(), 8, NoiseStream(5), 0);
  const Drift d = particle_drift(ens, mol, GridSpec{1, 512, {-2.0, 3.0}});
  double worst = 0.0, scale = 0.0;
  for (int k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < 8; ++i) {
      const double bf = brute_force_drift(ens.positions[k][i][0], ens.positions, p, mol, k);
      worst = std::max(worst, std::abs(d[k][i][0] - bf));
      scale = std::max(scale, std::abs(bf));
    }
  CHECK(scale > 0.1);
  CHECK(worst / scale < 1e-3);
}

TEST_CASE("drift is linear in the mobility") {
  ModelParams p = params();
  const Mollifier mol(1, p.eps);
  Ensemble ens = make_ensemble(p, samplers(), 200, NoiseStream(5), 0);
  const Drift d1 = particle_drift(ens, mol, grid256);
  ens.params.b = {2.0, 4.0};
  const Drift d2 = particle_drift(ens, mol, grid256);
  for (int k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < 200; ++i) CHECK(d2[k][i][0] == 2.0 * d1[k][i][0]);
}

TEST_CASE("mean-field drift uses the shared pipeline") {
  const ModelParams p = params();
  const Mollifier mol(1, p.eps);
  const auto rho = project_initial({gaussian(0.2, 0.3), gaussian(0.8, 0.3)}, grid256);
  const Ensemble ens = make_ensemble(p, samplers(), 50, NoiseStream(2), 0);
  const Drift d = meanfield_drift(ens.positions, rho, p, mol);
  const Drift e = drift_from_field(interaction_field({convolve(rho[0], mol), convolve(rho[1], mol)}, p, mol),
                                   ens.positions, p);
  CHECK(d == e);
  const ScalarField flat(grid256, 0.3);
  const Drift z = meanfield_drift({{{0.5, 0.0}}, {{0.3, 0.0}}}, {flat, flat}, p, mol);
  CHECK(std::abs(z[0][0][0]) < 1e-12);
  CHECK(std::abs(z[1][0][0]) < 1e-12);
}

TEST_CASE("mean-field drift is odd for mirrored data") {
  GridSpec g{1, 256, {-2.5, 2.5}};
  ModelParams p = params();
  p.a = {1.0, 1.0};
  p.b = {1.0, 1.0};
  const Mollifier mol(1, p.eps);
  const InitialDensity d(1, g.box, GaussianMixture{{0.5, 0.5}, {{-0.4, 0.0}, {0.4, 0.0}}, {0.3, 0.3}});
  const auto rho = project_initial({d, d}, g);
  const Drift dr = meanfield_drift({{g.center(100), g.center(155)}, {}}, rho, p, mol);
  CHECK(dr[0][0][0] == doctest::Approx(-dr[0][1][0]).epsilon(1e-10));
}

TEST_CASE("Euler-Maruyama increments have variance 2 sigma dt") {
  ModelParams p = params();
  p.b = {0.0, 0.0};
  Ensemble ens;
  ens.params = p;
  const std::size_t n = 40000;
  ens.positions.assign(2, std::vector<Point>(n, Point{0.5, 0.0}));
  ens.keys.assign(2, std::vector<std::uint32_t>(n));
  for (auto& k : ens.keys) std::iota(k.begin(), k.end(), 0u);
  const double dt = 0.01;
  em_step(ens, dt, NoiseStream(8), Mollifier(1, p.eps), grid256);
  CHECK(ens.step == 1);
  CHECK(ens.time == doctest::Approx(dt));
  for (int k = 0; k < 2; ++k) {
    double m = 0.0, v = 0.0;
    for (const auto& x : ens.positions[k]) m += x[0] - 0.5;
    m /= n;
    for (const auto& x : ens.positions[k]) v += (x[0] - 0.5 - m) * (x[0] - 0.5 - m);
    v /= n - 1;
    CHECK(std::abs(m) < 5.0 * std::sqrt(2.0 * p.sigma * dt / n));
    CHECK(v == doctest::Approx(2.0 * p.sigma * dt).epsilon(0.03));
  }
  CHECK(ens.positions[0] != ens.positions[1]);
}

TEST_CASE("a particle leaving the box raises BoundaryEscape") {
  Ensemble ens;
  ens.params = params();
  ens.params.b = {0.0, 0.0};
  ens.positions = {{{2.9999, 0.0}}, {{0.0, 0.0}}};
  ens.keys = {{0}, {0}};
  const Drift push{{{10.0, 0.0}}, {{0.0, 0.0}}};
  CHECK_THROWS_AS(em_step(ens, push, 0.01, NoiseStream(1), grid256.box), BoundaryEscape);
}

TEST_CASE("noise follows particle keys, so the step is exchangeable") {
  const ModelParams p = params();
  const Mollifier mol(1, p.eps);
  Ensemble a = make_ensemble(p, samplers(), 64, NoiseStream(3), 0);
  Ensemble b = a;
  std::reverse(b.positions[0].begin(), b.positions[0].end());
  std::reverse(b.keys[0].begin(), b.keys[0].end());
  em_step(a, 0.005, NoiseStream(3), mol, grid256);
  em_step(b, 0.005, NoiseStream(3), mol, grid256);
  for (std::size_t i = 0; i < 64; ++i) {
    CHECK(b.positions[0][63 - i][0] == doctest::Approx(a.positions[0][i][0]).epsilon(1e-12));
    CHECK(b.positions[1][i][0] == doctest::Approx(a.positions[1][i][0]).epsilon(1e-12));
  }
}

TEST_CASE("without drift the coupled pair never separates") {
  ModelParams p = params(0.1);
  p.b = {0.0, 0.0};
  const Mollifier mol(1, p.eps);
  const auto traj = aligned_nonlocal(p, 0.01);
  const CoupledResult r = run_coupled(p, samplers(), 256, 0.01, NoiseStream(4), 0, traj, mol, grid256);
  CHECK(r.statistic == 0.0);
  CHECK(r.times.size() == 11);
}

TEST_CASE("coupled runs are deterministic and replicas differ") {
  const ModelParams p = params(0.05);
  const Mollifier mol(1, p.eps);
  const auto traj = aligned_nonlocal(p, 0.005);
  const auto s = samplers();
  const auto r1 = run_coupled(p, s, 128, 0.005, NoiseStream(9), 0, traj, mol, grid256);
  const auto r2 = run_coupled(p, s, 128, 0.005, NoiseStream(9), 0, traj, mol, grid256);
  const auto r3 = run_coupled(p, s, 128, 0.005, NoiseStream(9), 1, traj, mol, grid256);
  CHECK(r1.statistic == r2.statistic);
  CHECK(r1.distance_series == r2.distance_series);
  CHECK(r1.statistic != r3.statistic);
  CHECK(r1.statistic > 0.0);
  CHECK(r1.distance_series.front() == 0.0);
  CHECK(r1.statistic == doctest::Approx(r1.per_species[0] + r1.per_species[1]));
  CHECK_THROWS_AS(run_coupled(p, s, 128, 0.003, NoiseStream(9), 0, traj, mol, grid256), ConfigError);
}

TEST_CASE("driftless interacting particles follow the heat kernel") {
  ModelParams p = params(0.2);
  p.b = {0.0, 0.0};
  const std::size_t n = 50000;
  const Ensemble ens = run_interacting(p, samplers(), n, 0.02, NoiseStream(12), 0, Mollifier(1, p.eps), grid256);
  CHECK(ens.step == 10);
  const double s = std::sqrt(0.3 * 0.3 + 2.0 * p.sigma * p.horizon);
  std::vector<double> xs;
  for (const auto& x : ens.positions[0]) xs.push_back(x[0]);
  const double ks = ks_statistic(xs, [&](double x) { return 0.5 * std::erfc(-(x - 0.2) / (s * std::sqrt(2.0))); });
  CHECK(ks < 0.01);
}

TEST_CASE("particle dump format") {
  Ensemble ens;
  ens.params = params();
  ens.positions = {{{0.25, 0.0}}, {{-0.5, 0.0}}};
  ens.keys = {{7}, {7}};
  ens.replica = 2;
  ens.step = 3;
  ens.time = 0.75;
  std::ostringstream out;
  write_particle_header(out, 1);
  write_particles(out, ens);
  CHECK(out.str() == "replica,species,particle,step,time,x1\n2,0,7,3,0.75,0.25\n2,1,7,3,0.75,-0.5\n");
}
