#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "crossdiff/error.hpp"
#include "crossdiff/noise.hpp"
#include "crossdiff/transport.hpp"

using namespace crossdiff;

TEST_CASE("transport between single points") {
  const std::vector<double> s{0.7}, d{0.7};
  CHECK(min_cost_transport(s, d, [](std::size_t, std::size_t) { return 3.0; }) == doctest::Approx(2.1));
}

TEST_CASE("unit masses reduce to the assignment problem") {
  const NoiseStream noise(4);
  for (std::uint32_t trial = 0; trial < 10; ++trial) {
    std::vector<std::vector<double>> c(6, std::vector<double>(6));
    for (std::uint32_t i = 0; i < 6; ++i)
      for (std::uint32_t j = 0; j < 6; ++j) c[i][j] = noise.uniform2({trial, i, j, 0, Purpose::synthetic}).first;
    std::vector<int> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
      double s = 0.0;
      for (int i = 0; i < 6; ++i) s += c[i][perm[i]];
      best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const std::vector<double> ones(6, 1.0);
    CHECK(min_cost_transport(ones, ones, [&](std::size_t i, std::size_t j) { return c[i][j]; }) ==
          doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("fractional masses split across destinations") {
  const std::vector<double> s{0.5, 0.5}, d{0.25, 0.75};
  const auto cost = [](std::size_t i, std::size_t j) { return std::abs(static_cast<double>(i) - 2.0 * j); };
  CHECK(min_cost_transport(s, d, cost) == doctest::Approx(0.25 * 0.0 + 0.25 * 2.0 + 0.5 * 1.0));
}

TEST_CASE("transport input validation") {
  const std::vector<double> s{0.5, 0.5}, d{0.9};
  CHECK_THROWS_AS(min_cost_transport(s, d, [](std::size_t, std::size_t) { return 1.0; }), DomainError);
  const std::vector<double> e{1.0};
  CHECK_THROWS_AS(min_cost_transport(s, e, [](std::size_t, std::size_t) { return -1.0; }), DomainError);
}
