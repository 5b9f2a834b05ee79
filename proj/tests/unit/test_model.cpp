#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crossdiff/analysis.hpp"
#include "crossdiff/error.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/pde.hpp"

using namespace crossdiff;

namespace {

const Box desk{-2.0, 3.0};

InitialDensity unit_uniform() { return {1, desk, UniformBox{{0.0, 0.0}, {1.0, 1.0}}}; }

InitialDensity two_bumps() {
  return {1, desk, GaussianMixture{{0.5, 0.5}, {{0.2, 0.0}, {0.8, 0.0}}, {0.3, 0.3}}};
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("model parameter invariants") {
  ModelParams p;
  CHECK_NOTHROW(p.validate());
  p.m_exponent = 1.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.dim = 3;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.a = {1.0, 0.0};
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.sigma = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.b = {0.0, 0.0};
  CHECK_NOTHROW(p.validate());
  p.b = {1.0};
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("eval_initial_density examples") {
  CHECK(eval_initial_density(unit_uniform(), {0.5, 0.0}) == doctest::Approx(1.0).epsilon(1e-14));

  InitialDensity g(1, Box{-2.0, 2.0}, GaussianMixture{{1.0}, {{0.0, 0.0}}, {0.1}});
  CHECK(eval_initial_density(g, {0.0, 0.0}) == doctest::Approx(3.9894228040143265).epsilon(1e-12));

  InitialDensity sb(1, desk, SmoothedBox{{0.0, 0.0}, {1.0, 1.0}, 0.1});
  CHECK(eval_initial_density(sb, {1.5, 0.0}) == 0.0);
  CHECK(eval_initial_density(sb, {-0.2, 0.0}) == 0.0);
  CHECK(eval_initial_density(sb, {0.5, 0.0}) > 0.0);

  CHECK_THROWS_AS(eval_initial_density(g, {2.5, 0.0}), DomainError);
}

TEST_CASE("densities that leak past the central 80% are rejected") {
  CHECK_THROWS_AS(InitialDensity(1, Box{0.0, 1.0}, UniformBox{{0.0, 0.0}, {1.0, 1.0}}), ConfigError);
  CHECK_THROWS_AS(InitialDensity(1, desk, GaussianMixture{{1.0}, {{2.0, 0.0}}, {0.3}}), ConfigError);
}

TEST_CASE("grid mass of every family is one") {
  GridSpec grid{1, 256, desk};
  GridSpec grid2{2, 64, desk};
  const std::vector<InitialDensity> one{
      unit_uniform(), two_bumps(), {1, desk, SmoothedBox{{-0.5, 0.0}, {1.2, 0.0}, 0.2}}};
  for (const auto& f : project_initial(one, grid)) CHECK(std::abs(f.mass() - 1.0) < 1e-8);

  const std::vector<InitialDensity> two{
      {2, desk, UniformBox{{0.0, 0.0}, {1.0, 0.5}}},
      {2, desk, GaussianMixture{{0.3, 0.7}, {{0.2, 0.4}, {0.8, 0.1}}, {0.3, 0.2}}},
      {2, desk, SmoothedBox{{-0.5, 0.0}, {1.2, 1.0}, 0.2}}};
  for (const auto& f : project_initial(two, grid2)) CHECK(std::abs(f.mass() - 1.0) < 1e-8);
}

TEST_CASE("sample_initial: uniform mean and count precondition") {
  NoiseStream noise(11);
  const auto xs = sample_initial(unit_uniform(), 100000, noise);
  double mean = 0.0;
  for (const auto& x : xs) mean += x[0];
  mean /= static_cast<double>(xs.size());
  CHECK(mean > 0.495);
  CHECK(mean < 0.505);
  CHECK_THROWS_AS(sample_initial(unit_uniform(), 0, noise), ConfigError);
}

TEST_CASE("sample_initial: KS against the analytic mixture CDF") {
  NoiseStream noise(5);
  auto cdf = [](double x) { return 0.5 * normal_cdf((x - 0.2) / 0.3) + 0.5 * normal_cdf((x - 0.8) / 0.3); };
  const auto pts = sample_initial(two_bumps(), 100000, noise);
  std::vector<double> xs;
  for (const auto& p : pts) xs.push_back(p[0]);
  CHECK(ks_statistic(xs, cdf) < 0.01);

  InitialSampler sampler(two_bumps());
  const auto big = sampler.sample(1000000, noise, 1, 0);
  xs.clear();
  for (const auto& p : big) xs.push_back(p[0]);
  CHECK(ks_statistic(xs, cdf) < 5e-3);
  CHECK(sampler.cdf(0.5) == doctest::Approx(cdf(0.5)).epsilon(1e-8));
}

TEST_CASE("sampling is reproducible and prefix-stable") {
  NoiseStream noise(99);
  InitialSampler sampler(two_bumps());
  const auto a = sampler.sample(50, noise, 3, 1);
  const auto b = sampler.sample(50, noise, 3, 1);
  CHECK(a == b);
  const auto tail = sampler.sample(10, noise, 3, 1, 40);
  CHECK(std::equal(tail.begin(), tail.end(), a.begin() + 40));
  CHECK(sampler.sample(50, noise, 3, 0) != a);
}

TEST_CASE("two-dimensional rejection sampling") {
  NoiseStream noise(3);
  InitialDensity box(2, desk, UniformBox{{0.0, 0.0}, {1.0, 0.5}});
  InitialSampler sampler(box);
  CHECK(sampler.acceptance_rate() == doctest::Approx(1.0 / (2.0 * 25.0)));
  const auto xs = sampler.sample(40000, noise, 0, 0);
  double mx = 0.0, my = 0.0;
  for (const auto& x : xs) {
    CHECK(box.domain().contains(x, 2));
    mx += x[0];
    my += x[1];
  }
  CHECK(mx / xs.size() == doctest::Approx(0.5).epsilon(0.02));
  CHECK(my / xs.size() == doctest::Approx(0.25).epsilon(0.02));

  InitialDensity tiny(2, desk, UniformBox{{0.0, 0.0}, {0.01, 0.01}});
  CHECK_THROWS_AS(InitialSampler{tiny}, ConfigError);
}
