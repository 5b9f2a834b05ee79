#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "crossdiff/analysis.hpp"
#include "crossdiff/error.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/particle.hpp"
#include "crossdiff/pde.hpp"

using namespace crossdiff;

namespace {

double uniform(const NoiseStream& noise, std::uint32_t i, std::uint32_t stream = 0) {
  return noise.uniform2({stream, 0, i, 0, Purpose::synthetic}).first;
}

std::vector<double> uniform_samples(std::size_t n, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  const NoiseStream noise(seed);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * uniform(noise, static_cast<std::uint32_t>(i));
  return out;
}

// Dense tableau simplex for max c.g subject to A g <= rhs, g >= 0, with
// rhs >= 0 so that the origin is feasible; Bland's rule against cycling.
double simplex_max(const std::vector<std::vector<double>>& a, const std::vector<double>& rhs,
                   const std::vector<double>& c) {
  const std::size_t m = a.size(), n = c.size();
  std::vector<std::vector<double>> t(m + 1, std::vector<double>(n + m + 1, 0.0));
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) t[i][j] = a[i][j];
    t[i][n + i] = 1.0;
    t[i][n + m] = rhs[i];
    basis[i] = n + i;
  }
  for (std::size_t j = 0; j < n; ++j) t[m][j] = -c[j];
  for (;;) {
    std::size_t enter = n + m;
    for (std::size_t j = 0; j < n + m; ++j)
      if (t[m][j] < -1e-12) {
        enter = j;
        break;
      }
    if (enter == n + m) return t[m][n + m];
    std::size_t leave = m;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i)
      if (t[i][enter] > 1e-12) {
        const double ratio = t[i][n + m] / t[i][enter];
        if (ratio < best - 1e-15 || (ratio < best + 1e-15 && leave < m && basis[i] < basis[leave])) {
          best = ratio;
          leave = i;
        }
      }
    REQUIRE(leave < m);
    const double piv = t[leave][enter];
    for (double& v : t[leave]) v /= piv;
    for (std::size_t i = 0; i <= m; ++i) {
      if (i == leave || t[i][enter] == 0.0) continue;
      const double f = t[i][enter];
      for (std::size_t j = 0; j <= n + m; ++j) t[i][j] -= f * t[leave][j];
    }
    basis[leave] = enter;
  }
}

// Primal BL problem on the union of supports: maximise sum f (mu - nu) over
// |f| <= 1 and |f_i - f_j| <= |x_i - x_j|, written for g = f + 1 in [0, 2].
double bl_primal(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  std::vector<double> xs, c;
  for (std::size_t i = 0; i < mu.points.size(); ++i) {
    xs.push_back(mu.points[i][0]);
    c.push_back(mu.weights[i]);
  }
  for (std::size_t i = 0; i < nu.points.size(); ++i) {
    xs.push_back(nu.points[i][0]);
    c.push_back(-nu.weights[i]);
  }
  const std::size_t n = xs.size();
  std::vector<std::vector<double>> a;
  std::vector<double> rhs;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(n, 0.0);
    row[i] = 1.0;
    a.push_back(row);
    rhs.push_back(2.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      std::vector<double> r(n, 0.0);
      r[i] = 1.0;
      r[j] = -1.0;
      a.push_back(r);
      rhs.push_back(std::abs(xs[i] - xs[j]));
    }
  }
  return simplex_max(a, rhs, c) - std::accumulate(c.begin(), c.end(), 0.0);
}

DiscreteMeasure random_measure(std::size_t n, std::uint64_t seed, double mass) {
  const NoiseStream noise(seed);
  DiscreteMeasure m;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [u, v] = noise.uniform2({1, 0, static_cast<std::uint32_t>(i), 0, Purpose::synthetic});
    m.points.push_back({6.0 * u - 3.0, 0.0});
    m.weights.push_back(0.1 + v);
    total += 0.1 + v;
  }
  for (double& w : m.weights) w *= mass / total;
  return m;
}

MetricSeries series(const std::vector<double>& x, const std::vector<double>& y) {
  MetricSeries s{"s", {}};
  for (std::size_t i = 0; i < x.size(); ++i) s.add(x[i], y[i]);
  return s;
}

}  // namespace

TEST_CASE("w2_empirical_1d basic values") {
  const std::vector<double> a{0.3, -1.0, 2.0};
  CHECK(w2_empirical_1d(a, a) == 0.0);
  CHECK(w2_empirical_1d(std::vector<double>(5, 0.0), std::vector<double>(5, 1.0)) == doctest::Approx(1.0));
  CHECK_THROWS_AS(w2_empirical_1d(a, std::vector<double>{1.0}), SizeError);
}

TEST_CASE("w2_empirical_1d equals the best of all 8! assignments") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto a = uniform_samples(8, seed, -2.0, 2.0);
    const auto b = uniform_samples(8, seed + 100, -1.0, 3.0);
    std::vector<int> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
      double c = 0.0;
      for (int i = 0; i < 8; ++i) c += (a[i] - b[perm[i]]) * (a[i] - b[perm[i]]);
      best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(std::abs(w2_empirical_1d(a, b) - std::sqrt(best / 8.0)) < 1e-12);
  }
}

TEST_CASE("w2_empirical_1d is a metric on random triples") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto x = uniform_samples(30, seed);
    const auto y = uniform_samples(30, seed + 50, -0.5, 1.5);
    const auto z = uniform_samples(30, seed + 99, 0.2, 0.4);
    CHECK(w2_empirical_1d(x, y) == w2_empirical_1d(y, x));
    CHECK(w2_empirical_1d(x, z) <= w2_empirical_1d(x, y) + w2_empirical_1d(y, z) + 1e-14);
    CHECK(w2_empirical_1d(x, y) > 0.0);
  }
}

TEST_CASE("w2_to_density_1d against closed forms") {
  const GridSpec g{1, 100, {-2.0, 3.0}};
  const auto uni = project_initial({InitialDensity(1, g.box, UniformBox{{0.0, 0.0}, {1.0, 0.0}})}, g)[0];
  CHECK(w2_to_density_1d(std::vector<double>{0.5}, uni) == doctest::Approx(std::sqrt(1.0 / 12.0)).epsilon(1e-12));
  std::vector<double> mids;
  for (int i = 0; i < 4; ++i) mids.push_back(0.125 + 0.25 * i);
  CHECK(w2_to_density_1d(mids, uni) == doctest::Approx(std::sqrt(1.0 / 12.0) / 4.0).epsilon(1e-12));
  ScalarField twice = uni;
  for (double& v : twice.values) v *= 2.0;
  CHECK(w2_to_density_1d(mids, twice) == doctest::Approx(w2_to_density_1d(mids, uni)).epsilon(1e-14));
}

TEST_CASE("w2_sliced") {
  const NoiseStream noise(21);
  PointCloud a{2, {}};
  for (std::uint32_t i = 0; i < 50; ++i) {
    const auto [u, v] = noise.uniform2({0, 0, i, 0, Purpose::synthetic});
    a.coords.push_back(u);
    a.coords.push_back(v);
  }
  CHECK(w2_sliced(a, a, 100, noise) == 0.0);
  PointCloud b = a;
  for (std::size_t i = 0; i < b.coords.size(); i += 2) b.coords[i] += 1.0;
  const double w = w2_sliced(a, b, 1000, noise);
  CHECK(w >= 0.68);
  CHECK(w <= 0.73);
  CHECK(w2_sliced(b, a, 1000, noise) == doctest::Approx(w).epsilon(1e-14));
  CHECK_THROWS_AS(w2_sliced(a, PointCloud{2, {0.0, 0.0}}, 10, noise), SizeError);
}

TEST_CASE("bl_distance two-point cases") {
  const auto delta = [](double x) { return DiscreteMeasure{1, {{x, 0.0}}, {1.0}}; };
  CHECK(bl_distance(delta(0.0), delta(0.5)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(bl_distance(delta(0.0), delta(3.0)) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(bl_distance(delta(0.0), delta(-1.25)) == doctest::Approx(1.25).epsilon(1e-14));
  CHECK(bl_distance(delta(0.7), delta(0.7)) == 0.0);
  DiscreteMeasure many{1, std::vector<Point>(201, Point{0.0, 0.0}), std::vector<double>(201, 1.0 / 201)};
  CHECK_THROWS_AS(bl_distance(many, delta(0.0)), SizeError);
}

TEST_CASE("bl_distance matches the primal linear program") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const DiscreteMeasure mu = random_measure(5, seed, 1.0);
    const DiscreteMeasure nu = random_measure(4, seed + 40, seed % 2 ? 1.0 : 0.7);
    const double bl = bl_distance(mu, nu);
    CHECK(bl == doctest::Approx(bl_primal(mu, nu)).epsilon(1e-10));
    CHECK(bl == doctest::Approx(bl_distance(nu, mu)).epsilon(1e-12));
    CHECK(bl <= 2.0);
    if (seed % 2) CHECK(bl <= w1_discrete(mu, nu) + 1e-12);
  }
}

TEST_CASE("w1_discrete") {
  const DiscreteMeasure mu{1, {{0.0, 0.0}, {1.0, 0.0}}, {0.5, 0.5}};
  const DiscreteMeasure nu{1, {{0.5, 0.0}, {3.0, 0.0}}, {0.5, 0.5}};
  CHECK(w1_discrete(mu, nu) == doctest::Approx(0.25 + 1.0));
  CHECK_THROWS_AS(w1_discrete(mu, DiscreteMeasure{1, {{0.0, 0.0}}, {0.3}}), DomainError);
}

TEST_CASE("energy of a uniform density") {
  ModelParams p;
  p.n_species = 1;
  p.a = {1.0};
  p.b = {1.0};
  p.sigma = 1.0;
  const GridSpec g{1, 64, {0.0, 1.0}};
  CHECK(energy_local({ScalarField(g, 1.0)}, p) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(energy_regularised({ScalarField(g, 1.0)}, p, Mollifier(1, 0.1)) ==
        doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("energy homogeneity in a") {
  const GridSpec g{1, 256, {-2.0, 3.0}};
  const auto rho = project_initial({InitialDensity(1, g.box, GaussianMixture{{1.0}, {{0.5, 0.0}}, {0.3}})}, g);
  ModelParams p;
  p.n_species = 1;
  p.a = {1.0};
  p.b = {1.0};
  p.m_exponent = 3.0;
  const double e1 = energy_local(rho, p);
  p.sigma = 1e-300;
  const double pow1 = energy_local(rho, p);
  p.a = {2.0};
  const double pow2 = energy_local(rho, p);
  CHECK(pow2 == doctest::Approx(8.0 * pow1).epsilon(1e-12));
  p.sigma = 0.05;
  const double ent1 = e1 - pow1;
  CHECK(energy_local(rho, p) - pow2 == doctest::Approx(2.0 * ent1).epsilon(1e-10));
}

TEST_CASE("entropy of a Gaussian field") {
  const GridSpec g{1, 512, {-2.0, 3.0}};
  const double s = 0.3;
  const InitialDensity gauss(1, g.box, GaussianMixture{{1.0}, {{0.5, 0.0}}, {s}});
  const std::vector<ScalarField> rho{sample_on_grid(g, [&](const Point& x) { return gauss(x); })};
  ModelParams p;
  p.n_species = 1;
  p.a = {1.0};
  p.b = {1.0};
  p.sigma = 1.0;
  ModelParams q = p;
  q.sigma = 2.0;
  const double entropy = energy_local(rho, q) - energy_local(rho, p);
  const double exact = -0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * s * s);
  CHECK(std::abs(entropy - exact) < 1e-4 * std::abs(exact));
}

TEST_CASE("regularised energy approaches the local one as eps shrinks") {
  const GridSpec g{1, 1024, {-2.0, 3.0}};
  const auto rho = project_initial({InitialDensity(1, g.box, GaussianMixture{{1.0}, {{0.2, 0.0}}, {0.3}}),
                                    InitialDensity(1, g.box, GaussianMixture{{1.0}, {{0.8, 0.0}}, {0.25}})},
                                   g);
  const ModelParams p;
  const double local = energy_local(rho, p);
  double previous = std::numeric_limits<double>::infinity();
  for (double eps : {0.4, 0.2, 0.1}) {
    const double gap = std::abs(energy_regularised(rho, p, Mollifier(1, eps)) - local);
    CHECK(gap < previous);
    previous = gap;
  }
  CHECK(mollified_lm_power(rho, p, Mollifier(1, 0.2)) > 0.0);
  const ScalarField c(g, 0.1);
  CHECK(energy_regularised({c, c}, p, Mollifier(1, 0.2)) == doctest::Approx(energy_local({c, c}, p)).epsilon(1e-13));
}

TEST_CASE("coupling constant exponents") {
  CHECK(coupling_constant(0.5, 0.01, 1, 2.0) == doctest::Approx(std::pow(0.5, 8) * std::exp(0.01 / std::pow(0.5, 6))));
  CHECK(coupling_constant(0.7, 0.0, 1, 2.0) == doctest::Approx(std::pow(0.7, 8)).epsilon(1e-15));
  CHECK(coupling_constant(0.9, 0.1, 2, 3.0) == doctest::Approx(std::pow(0.9, 14) * std::exp(0.1 / std::pow(0.9, 12))));
  CHECK(std::isinf(coupling_constant(0.1, 1.0, 1, 2.0)));
  CHECK_THROWS_AS(coupling_constant(0.5, -1.0, 1, 2.0), DomainError);
}

TEST_CASE("eps_schedule") {
  CHECK(eps_schedule(std::exp(20.0), 1.0, 1, 2.0) == doctest::Approx(0.6812920690579612).epsilon(1e-12));
  double prev = std::numeric_limits<double>::infinity();
  double prev_ratio = std::numeric_limits<double>::infinity();
  for (double n = 16.0; n <= 1e12; n *= 4.0) {
    const double e = eps_schedule(n, 0.5, 1, 2.0);
    CHECK(e < prev);
    const double ratio = coupling_constant(e, 0.5, 1, 2.0) / n;
    CHECK(ratio < prev_ratio);
    CHECK(std::exp(0.5 / std::pow(e, 6)) == doctest::Approx(std::sqrt(n)).epsilon(1e-9));
    prev = e;
    prev_ratio = ratio;
  }
  CHECK(eps_schedule(1e12, 0.5, 1, 2.0) < 0.6);
  CHECK_THROWS_AS(eps_schedule(2.0, 1.0, 1, 2.0), DomainError);
}

TEST_CASE("fit_rate on exact power laws") {
  std::vector<double> ns{64, 128, 256, 512, 1024}, ys, eps{0.4, 0.2, 0.1, 0.05}, es;
  for (double n : ns) ys.push_back(4.0 / n);
  for (double e : eps) es.push_back(3.0 * e * e);
  CHECK(std::abs(fit_rate(series(ns, ys)).slope + 1.0) < 1e-12);
  CHECK(fit_rate(series(ns, ys)).r_squared == doctest::Approx(1.0));
  CHECK(fit_rate(series(eps, es)).slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit_rate(series(eps, es)).intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK_THROWS_AS(fit_rate(series({1, 2, 3}, {1, 2, 3})), StatisticsError);
  CHECK_THROWS_AS(fit_rate(series({1, 2, 3, 4}, {1, 0, 3, 4})), DomainError);
  CHECK_THROWS_AS(fit_rate(series({1, 3, 2, 4}, {1, 2, 3, 4})), StatisticsError);
}

TEST_CASE("fit_rate with 10% multiplicative noise stays in [-1.2, -0.8]") {
  const NoiseStream noise(77);
  const int trials = 2000;
  int inside = 0;
  for (int t = 0; t < trials; ++t) {
    MetricSeries s{"noisy", {}};
    for (std::uint32_t i = 0; i < 8; ++i) {
      const double n = 64.0 * std::pow(2.0, i);
      const double z = noise.normal2({static_cast<std::uint32_t>(t), 0, i, 0, Purpose::synthetic}).first;
      s.add(n, (1.0 + 0.1 * z) / n);
    }
    const double slope = fit_rate(s).slope;
    inside += slope >= -1.2 && slope <= -0.8;
  }
  CHECK(static_cast<double>(inside) / trials >= 0.95);
}

TEST_CASE("chaos gap of independent particles is estimator noise") {
  ModelParams p;
  p.horizon = 0.1;
  p.b = {0.0, 0.0};
  const InitialDensity d(1, {-2.0, 3.0}, GaussianMixture{{1.0}, {{0.5, 0.0}}, {0.3}});
  const std::vector<InitialSampler> samplers{InitialSampler(d), InitialSampler(d)};
  const GridSpec g{1, 256, {-2.0, 3.0}};
  const NoiseStream noise(31);
  std::vector<std::vector<Point>> sim, synthetic;
  for (std::uint32_t r = 0; r < 120; ++r) {
    sim.push_back(run_interacting(p, samplers, 64, 0.02, noise, r, Mollifier(1, p.eps), g).positions[0]);
    std::vector<Point> iid;
    for (std::uint32_t i = 0; i < 64; ++i) {
      const auto [z0, z1] = noise.normal2({r, 9, i, 0, Purpose::synthetic});
      iid.push_back({0.5 + std::sqrt(0.09 + 2.0 * p.sigma * p.horizon) * z0, 0.0});
    }
    synthetic.push_back(iid);
  }
  const double gs = chaos_gap(sim, 1, 2, 16, 200, noise);
  const double gi = chaos_gap(synthetic, 1, 2, 16, 200, noise);
  CHECK(gs > 0.0);
  CHECK(gs <= 2.0 * gi);
  CHECK(gi <= 2.0 * gs);
  CHECK(chaos_gap(sim, 1, 1, 16, 200, noise) == 0.0);
  CHECK_THROWS_AS(chaos_gap({sim.begin(), sim.begin() + 50}, 1, 2, 16, 200, noise), StatisticsError);
}

TEST_CASE("spearman") {
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<double> y(x.rbegin(), x.rend());
  const Spearman s = spearman(x, y);
  CHECK(s.rho == doctest::Approx(-1.0));
  CHECK(s.p_value == doctest::Approx(1.0 / 40320.0));
  const Spearman up = spearman(x, x);
  CHECK(up.rho == doctest::Approx(1.0));
  CHECK(up.p_value == doctest::Approx(1.0));
  const std::vector<double> x3{1, 2, 3}, y3{3, 2, 1};
  CHECK(spearman(x3, y3).p_value == doctest::Approx(1.0 / 6.0));
  std::vector<double> xl(12), yl(12);
  for (int i = 0; i < 12; ++i) {
    xl[i] = i;
    yl[i] = -i + (i % 3);
  }
  const Spearman l = spearman(xl, yl);
  CHECK(l.rho < -0.9);
  CHECK(l.p_value < 1e-4);
  CHECK_THROWS_AS(spearman(std::vector<double>{1, 2}, std::vector<double>{2, 1}), StatisticsError);
}

TEST_CASE("ks_statistic and mean_stderr") {
  const std::vector<double> s{0.1, 0.4, 0.7};
  CHECK(ks_statistic(s, [](double x) { return std::clamp(x, 0.0, 1.0); }) == doctest::Approx(0.3));
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const MeanStderr m = mean_stderr(v);
  CHECK(m.mean == doctest::Approx(2.5));
  CHECK(m.stderr_value == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
}

TEST_CASE("series validation") {
  MetricSeries s{"bad", {}};
  s.add(1.0, 2.0);
  s.add(1.0, 3.0);
  CHECK_THROWS_AS(s.validate(), StatisticsError);
  MetricSeries n{"nan", {}};
  n.add(1.0, std::nan(""));
  CHECK_THROWS_AS(n.validate(), StatisticsError);
}
