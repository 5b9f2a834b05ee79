#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crossdiff/analysis.hpp"
#include "crossdiff/field.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/pde.hpp"

namespace crossdiff {

enum class ExperimentKind {
  poc_vs_N,
  nonlocal_to_local,
  same_mobility_check,
  energy_dissipation,
  eps_of_N_combined,
  heat_oracle,
};

std::string to_string(ExperimentKind kind);
ExperimentKind parse_kind(const std::string& name);

/// Everything a run needs. Built by parse_config, printed by serialize.
struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::heat_oracle;
  std::uint64_t seed = 1;
  int replicas = 20;
  std::vector<std::size_t> n_values;
  std::vector<double> eps_values;
  double particle_dt = 0.0;     ///< 0: horizon / 100
  std::size_t particles = 100000;  ///< heat_oracle particle count

  ModelParams model;
  std::vector<DensityShape> species;
  GridSpec grid;

  double cfl_safety = 0.5;
  double solver_dt = 0.0;  ///< 0: derived from the stability bound
  int output_every = 1;
  Reconstruction reconstruction = Reconstruction::minmod;

  void validate() const;
  std::vector<InitialDensity> densities() const;
  SolverConfig solver() const;
  double effective_particle_dt() const;

  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

/// Parses the sectioned `key = value` config format (see README). Throws
/// ParseError carrying the offending line.
ExperimentSpec parse_config(const std::string& text);
ExperimentSpec parse_config_file(const std::string& path);

/// Canonical text form; parse_config(serialize(s)) == s.
std::string serialize(const ExperimentSpec& spec);

/// Pass/fail verdict tied to a numbered acceptance criterion: passes when
/// lower <= value <= upper.
struct Check {
  int criterion = 0;
  std::string name;
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool passed = false;
};

Check make_check(int criterion, std::string name, double value, double lower, double upper);

struct NamedTrajectory {
  std::string name;
  FieldTrajectory trajectory;
};

struct RunReport {
  ExperimentSpec spec;
  std::vector<MetricSeries> series;
  std::vector<std::pair<std::string, RateFit>> fits;
  std::vector<Check> checks;
  std::vector<NamedTrajectory> snapshots;
  std::vector<std::pair<std::string, double>> timings;  ///< seconds
  std::string error;  ///< nonempty when the run aborted

  bool passed() const;
  const MetricSeries* find_series(const std::string& label) const;
};

struct RunOptions {
  int threads = 1;
};

/// Runs one experiment. Numerical failures do not escape: the report keeps
/// whatever was computed, `error` names the failing stage, and a failed
/// check is appended.
RunReport run_experiment(const ExperimentSpec& spec, const RunOptions& options = {});

/// report.csv, fits.csv, checks.csv, manifest.txt and snapshots/ in `dir`.
void write_report(const RunReport& report, const std::string& dir);

std::string report_csv(const RunReport& report);
std::string fits_csv(const RunReport& report);
std::string checks_csv(const RunReport& report);
/// A valid config (the spec echo) with version and timings as comments.
std::string manifest_text(const RunReport& report);

std::string version();

}  // namespace crossdiff
