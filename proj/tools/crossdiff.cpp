#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "crossdiff/error.hpp"
#include "crossdiff/harness.hpp"

namespace fs = std::filesystem;
using namespace crossdiff;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void print_checks(const RunReport& report) {
  for (const auto& c : report.checks)
    std::cout << "criterion " << c.criterion << " " << c.name << ": " << (c.passed ? "PASS" : "FAIL")
              << " value=" << c.value << " bounds=[" << c.lower << ", " << c.upper << "]\n";
  if (!report.error.empty()) std::cout << "error: " << report.error << '\n';
  for (const auto& [name, s] : report.timings) std::cout << "timing " << name << ": " << s << " s\n";
}

int run(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed, int threads) {
  ExperimentSpec spec = parse_config_file(config);
  if (seed) spec.seed = *seed;
  const RunReport report = run_experiment(spec, {threads});
  write_report(report, out);
  print_checks(report);
  return report.passed() ? 0 : 1;
}

int replay(const std::string& manifest, std::string out, int threads) {
  const fs::path original = fs::path(manifest).parent_path();
  const ExperimentSpec spec = parse_config(slurp(manifest));
  if (out.empty()) out = (original / "replay").string();
  const RunReport report = run_experiment(spec, {threads});
  write_report(report, out);
  print_checks(report);
  const fs::path old_csv = original / "report.csv";
  bool identical = true;
  if (fs::exists(old_csv)) {
    identical = slurp(old_csv) == report_csv(report);
    std::cout << "report.csv " << (identical ? "reproduced byte-for-byte" : "DIFFERS from the original") << '\n';
  } else {
    std::cout << "no report.csv next to the manifest; nothing to compare\n";
  }
  return report.passed() && identical ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crossdiff: particle and PDE experiments for cross-diffusion systems"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  std::string config, out, manifest;
  std::optional<std::uint64_t> seed;
  int threads = 1;

  auto* run_cmd = app.add_subcommand("run", "Run an experiment and write its report");
  run_cmd->add_option("config", config, "Experiment config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out, "Output directory")->required();
  run_cmd->add_option("--seed", seed, "Override the config seed");
  run_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* validate_cmd = app.add_subcommand("validate", "Parse and validate a config");
  validate_cmd->add_option("config", config, "Experiment config file")->required()->check(CLI::ExistingFile);

  auto* replay_cmd = app.add_subcommand("replay", "Rerun from a manifest and compare report.csv");
  replay_cmd->add_option("manifest", manifest, "manifest.txt of an earlier run")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--out", out, "Output directory (default: <run>/replay)");
  replay_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return run(config, out, seed, threads);
    if (*validate_cmd) {
      const ExperimentSpec spec = parse_config_file(config);
      std::cout << "ok: " << to_string(spec.kind) << ", " << spec.model.n_species << " species, dim "
                << spec.model.dim << '\n';
      return 0;
    }
    if (*replay_cmd) return replay(manifest, out, threads);
  } catch (const ParseError& e) {
    std::cerr << config << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
