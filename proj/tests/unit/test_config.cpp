#include <doctest.h>

#include <string>

#include "crossdiff/error.hpp"
#include "crossdiff/harness.hpp"

using namespace crossdiff;

namespace {

const std::string minimal = R"(# comment
[experiment]
kind = heat_oracle

[species.1]
kind = gaussian_mixture
means = 0.2
sds = 0.3

[species.2]
kind = smoothed_box
lower = 0
upper = 1
)";

int error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("defaults fill everything not given") {
  const ExperimentSpec s = parse_config(minimal);
  CHECK(s.kind == ExperimentKind::heat_oracle);
  CHECK(s.seed == 1);
  CHECK(s.model == ModelParams{});
  CHECK(s.grid == GridSpec{});
  CHECK(s.species.size() == 2);
  CHECK(std::get<SmoothedBox>(s.species[1]).ramp == 0.1);
  CHECK(std::get<GaussianMixture>(s.species[0]).weights == std::vector<double>{1.0});
  CHECK(s.cfl_safety == 0.5);
  CHECK(s.reconstruction == Reconstruction::minmod);
}

TEST_CASE("serialize round-trips") {
  ExperimentSpec s = parse_config(minimal);
  s.kind = ExperimentKind::poc_vs_N;
  s.n_values = {64, 128, 256, 512};
  s.eps_values = {0.4, 0.1};
  s.model.b = {1.0, 0.25};
  s.model.sigma = 0.1 + 0.2;
  s.particle_dt = 1.0 / 3.0;
  s.reconstruction = Reconstruction::first_order;
  s.species[0] = GaussianMixture{{0.3, 0.7}, {{0.1, 0.0}, {0.9, 0.0}}, {0.2, 0.25}};
  const std::string text = serialize(s);
  CHECK(parse_config(text) == s);
  CHECK(serialize(parse_config(text)) == text);
}

TEST_CASE("m below 2 is rejected with its line") {
  const std::string text = "[experiment]\nkind = heat_oracle\n[model]\nspecies = 1\nm = 1.5\n"
                           "[species.1]\nkind = gaussian_mixture\nmeans = 0.5\nsds = 0.3\n";
  CHECK(error_line(text) == 5);
  CHECK_THROWS_WITH_AS(parse_config(text), doctest::Contains("m >= 2"), ParseError);
}

TEST_CASE("syntax errors carry line numbers") {
  CHECK(error_line(minimal + "[model]\nsigmaa = 0.1\n") == 15);
  CHECK(error_line(minimal + "[model]\nsigma = 0.1\nsigma = 0.2\n") == 16);
  CHECK(error_line(minimal + "[nonsense]\n") == 14);
  CHECK(error_line(minimal + "[model]\njust text\n") == 15);
  CHECK(error_line(minimal + "[model]\nsigma = abc\n") == 15);
  CHECK(error_line(minimal + "[model]\nsigma = -1\n") == 15);
}

TEST_CASE("semantic errors") {
  CHECK_THROWS_AS(parse_config("[model]\nsigma = 0.1\n"), ParseError);
  CHECK_THROWS_AS(parse_config(minimal + "[model]\nspecies = 3\n"), ParseError);
  CHECK_THROWS_AS(parse_config(minimal + "[model]\nb = 1, 2\n[experiment]\n"), ParseError);
  const std::string same = "[experiment]\nkind = same_mobility_check\n[model]\nb = 1, 2\n"
                           "[species.1]\nkind = uniform_box\nlower = 0\nupper = 1\n"
                           "[species.2]\nkind = uniform_box\nlower = 0\nupper = 1\n";
  CHECK_THROWS_AS(parse_config(same), ParseError);
}

TEST_CASE("shipped configs parse") {
  for (const char* name : {"heat_oracle", "poc_vs_N", "nonlocal_to_local", "same_mobility_check",
                           "energy_dissipation", "eps_of_N_combined"}) {
    INFO(name);
    const ExperimentSpec s = parse_config_file(std::string(CROSSDIFF_CONFIG_DIR) + "/" + name + ".ini");
    CHECK(to_string(s.kind) == name);
    CHECK(parse_config(serialize(s)) == s);
  }
  CHECK_THROWS_AS(parse_config_file("/nonexistent/file.ini"), Error);
}
