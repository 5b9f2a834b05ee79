#include "crossdiff/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "crossdiff/error.hpp"
#include "crossdiff/particle.hpp"
#include "format_detail.hpp"

#ifndef CROSSDIFF_VERSION
#define CROSSDIFF_VERSION "unknown"
#endif

namespace crossdiff {

std::string version() { return CROSSDIFF_VERSION; }

Check make_check(int criterion, std::string name, double value, double lower, double upper) {
  return {criterion, std::move(name), value, lower, upper, value >= lower && value <= upper};
}

bool RunReport::passed() const {
  if (!error.empty()) return false;
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

const MetricSeries* RunReport::find_series(const std::string& label) const {
  for (const auto& s : series)
    if (s.label == label) return &s;
  return nullptr;
}

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

template <class F>
void parallel_for(std::size_t count, int threads, F&& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

/// Snapshots 0 and last only, for the report's snapshots/ directory.
FieldTrajectory endpoints(const FieldTrajectory& t) {
  FieldTrajectory out = t;
  out.times = {t.times.front(), t.times.back()};
  out.snapshots = {t.snapshots.front(), t.snapshots.back()};
  out.output_every = static_cast<int>(t.steps);
  return out;
}

std::vector<InitialSampler> make_samplers(const std::vector<InitialDensity>& densities) {
  std::vector<InitialSampler> out;
  for (const auto& d : densities) out.emplace_back(d);
  return out;
}

double max_relative_increase(const std::vector<double>& v) {
  double worst = -inf;
  const double scale = std::abs(v.front());
  for (std::size_t i = 1; i < v.size(); ++i) worst = std::max(worst, (v[i] - v[i - 1]) / scale);
  return v.size() > 1 ? worst : 0.0;
}

struct Context {
  const ExperimentSpec& spec;
  const RunOptions& options;
  RunReport& report;
  std::string stage;

  void time(const std::string& name, double s) { report.timings.emplace_back(name, s); }
};

// Particle step and PDE step aligned: the PDE runs `stride` steps per
// particle step and outputs exactly at the particle step times.
SolverConfig aligned_solver(const ExperimentSpec& spec, const std::vector<ScalarField>& rho0,
                            double particle_dt) {
  SolverConfig cfg = spec.solver();
  const double limit = cfg.dt > 0.0 ? cfg.dt : suggest_dt(Level::nonlocal, spec.model, rho0, cfg);
  const auto stride = static_cast<int>(std::ceil(particle_dt / limit - 1e-9));
  cfg.dt = particle_dt / stride;
  cfg.output_every = stride;
  return cfg;
}

void run_poc_vs_n(Context& ctx) {
  const ExperimentSpec& spec = ctx.spec;
  const ModelParams& params = spec.model;
  const auto densities = spec.densities();
  const auto samplers = make_samplers(densities);
  const auto rho0 = project_initial(densities, spec.grid);
  const Mollifier mol(params.dim, params.eps);
  const double dt = spec.effective_particle_dt();
  const NoiseStream noise(spec.seed);

  ctx.stage = "nonlocal PDE solve";
  Stopwatch sw;
  const FieldTrajectory traj = solve_nonlocal(params, rho0, aligned_solver(spec, rho0, dt));
  ctx.time("nonlocal_solve", sw.seconds());
  ctx.report.snapshots.push_back({"nonlocal", endpoints(traj)});

  const std::vector<VectorField> fields = meanfield_fields(traj, params, mol);
  const std::size_t nn = spec.n_values.size();
  const std::size_t nr = static_cast<std::size_t>(spec.replicas);
  std::vector<CoupledResult> results(nn * nr);

  ctx.stage = "coupled particle runs";
  Stopwatch sp;
  parallel_for(results.size(), ctx.options.threads, [&](std::size_t task) {
    const std::size_t a = task / nr, r = task % nr;
    results[task] = run_coupled(params, samplers, spec.n_values[a], dt, noise, static_cast<std::uint32_t>(r),
                                fields, traj.times, mol, spec.grid);
  });
  ctx.time("coupled_runs", sp.seconds());

  MetricSeries total{"coupled_sup_distance", {}};
  std::vector<MetricSeries> per(params.n_species);
  for (int k = 0; k < params.n_species; ++k) per[k].label = "coupled_sup_distance_species_" + std::to_string(k + 1);
  MetricSeries bound{"coupling_constant_over_N", {}};
  for (std::size_t a = 0; a < nn; ++a) {
    const double n = static_cast<double>(spec.n_values[a]);
    std::vector<double> stat(nr);
    for (std::size_t r = 0; r < nr; ++r) stat[r] = results[a * nr + r].statistic;
    const MeanStderr ms = mean_stderr(stat);
    total.add(n, ms.mean, ms.stderr_value);
    for (int k = 0; k < params.n_species; ++k) {
      std::vector<double> sk(nr);
      for (std::size_t r = 0; r < nr; ++r) sk[r] = results[a * nr + r].per_species[k];
      const MeanStderr mk = mean_stderr(sk);
      per[k].add(n, mk.mean, mk.stderr_value);
    }
    bound.add(n, coupling_constant(params.eps, params.horizon, params.dim, params.m_exponent) / n);
  }
  ctx.report.series.push_back(total);
  for (auto& s : per) ctx.report.series.push_back(s);
  ctx.report.series.push_back(bound);

  if (nn >= 4) {
    const RateFit fit = fit_rate(total);
    ctx.report.fits.emplace_back(total.label, fit);
    ctx.report.checks.push_back(make_check(1, "poc_slope", fit.slope, -1.3, -0.7));
  }
  if (nn >= 3) {
    const auto ns = total.abscissae();
    const auto vs = total.values();
    const Spearman sp_test = spearman(ns, vs);
    ctx.report.checks.push_back(make_check(1, "poc_trend_spearman_p", sp_test.p_value, 0.0, 0.05));
  }
}

double space_time_l1(const FieldTrajectory& a, const FieldTrajectory& b) {
  if (a.size() != b.size()) throw ConfigError("space-time L1: trajectories have different output times");
  double acc = 0.0, prev = 0.0;
  for (std::size_t s = 0; s < a.size(); ++s) {
    if (std::abs(a.times[s] - b.times[s]) > 1e-12) throw ConfigError("space-time L1: output times differ");
    double d = 0.0;
    for (std::size_t k = 0; k < a.snapshots[s].size(); ++k) d += l1_distance(a.snapshots[s][k], b.snapshots[s][k]);
    if (s > 0) acc += 0.5 * (a.times[s] - a.times[s - 1]) * (prev + d);
    prev = d;
  }
  return acc;
}

void run_nonlocal_to_local(Context& ctx) {
  const ExperimentSpec& spec = ctx.spec;
  const auto rho0 = project_initial(spec.densities(), spec.grid);
  SolverConfig cfg = spec.solver();
  ctx.stage = "step size selection";
  if (!(cfg.dt > 0.0)) {
    double dt = suggest_dt(Level::local, spec.model, rho0, cfg);
    for (double eps : spec.eps_values) {
      ModelParams p = spec.model;
      p.eps = eps;
      dt = std::min(dt, suggest_dt(Level::nonlocal, p, rho0, cfg));
    }
    cfg.dt = dt;
  }

  ctx.stage = "local PDE solve";
  Stopwatch sw;
  const FieldTrajectory local = solve_local(spec.model, rho0, cfg);
  ctx.time("local_solve", sw.seconds());
  ctx.report.snapshots.push_back({"local", endpoints(local)});

  ctx.stage = "nonlocal PDE solves";
  std::vector<FieldTrajectory> nonlocal(spec.eps_values.size());
  Stopwatch sn;
  parallel_for(nonlocal.size(), ctx.options.threads, [&](std::size_t i) {
    ModelParams p = spec.model;
    p.eps = spec.eps_values[i];
    nonlocal[i] = solve_nonlocal(p, rho0, cfg);
  });
  ctx.time("nonlocal_solves", sn.seconds());

  MetricSeries gap{"l1_gap_space_time", {}}, final_gap{"l1_gap_final", {}};
  for (std::size_t i = 0; i < nonlocal.size(); ++i) {
    gap.add(spec.eps_values[i], space_time_l1(nonlocal[i], local));
    double d = 0.0;
    for (std::size_t k = 0; k < rho0.size(); ++k) d += l1_distance(nonlocal[i].back()[k], local.back()[k]);
    final_gap.add(spec.eps_values[i], d);
    ctx.report.snapshots.push_back({"nonlocal_eps_" + detail::format_double(spec.eps_values[i]),
                                    endpoints(nonlocal[i])});
  }
  ctx.report.series.push_back(gap);
  ctx.report.series.push_back(final_gap);
  if (gap.points.size() >= 4) ctx.report.fits.emplace_back(gap.label, fit_rate(gap));

  const auto v = gap.values();
  double worst = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) worst = std::max(worst, v[i] / v[i - 1]);
  ctx.report.checks.push_back(make_check(2, "gap_monotone_ratio", worst, 0.0, 1.05));
  ctx.report.checks.push_back(make_check(2, "gap_final_over_first", v.back() / v.front(), 0.0, 0.25));
}

void run_same_mobility(Context& ctx) {
  const ExperimentSpec& spec = ctx.spec;
  const ModelParams& params = spec.model;
  const auto rho0 = project_initial(spec.densities(), spec.grid);
  SolverConfig cfg = spec.solver();
  cfg.output_every = 1;
  if (!(cfg.dt > 0.0)) cfg.dt = suggest_dt(Level::local, params, rho0, cfg);
  const double b = params.b.front();

  Stopwatch sw;
  ctx.stage = "coupled local solve";
  const FieldTrajectory coupled = solve_local(params, rho0, cfg);
  ctx.stage = "porous medium solve";
  const FieldTrajectory pme =
      solve_pme(b, params.sigma, params.m_exponent, weighted_sum(rho0, params.a), params.horizon, cfg);
  FieldTrajectory pressure = pme;
  for (auto& snap : pressure.snapshots) snap[0] = power(snap[0], params.m_exponent - 1.0);
  ctx.stage = "Fokker-Planck solve";
  const FieldTrajectory fp = solve_fokker_planck(b, params.sigma, pressure, rho0, cfg);
  ctx.time("solves", sw.seconds());
  ctx.report.snapshots.push_back({"coupled", endpoints(coupled)});
  ctx.report.snapshots.push_back({"pme", endpoints(pme)});
  ctx.report.snapshots.push_back({"fokker_planck", endpoints(fp)});

  MetricSeries sum_gap{"weighted_sum_vs_pme_l1", {}};
  std::vector<MetricSeries> sp(params.n_species);
  for (int k = 0; k < params.n_species; ++k) sp[k].label = "species_" + std::to_string(k + 1) + "_vs_fokker_planck_l1";
  double worst_sum = 0.0, worst_species = 0.0;
  const std::size_t every = std::max<std::size_t>(1, coupled.size() / 100);
  for (std::size_t s = 0; s < coupled.size(); ++s) {
    const double d = l1_distance(weighted_sum(coupled.snapshots[s], params.a), pme.snapshots[s][0]);
    worst_sum = std::max(worst_sum, d);
    const bool keep = s % every == 0 || s + 1 == coupled.size();
    if (keep) sum_gap.add(coupled.times[s], d);
    for (int k = 0; k < params.n_species; ++k) {
      const double dk = l1_distance(coupled.snapshots[s][k], fp.snapshots[s][k]);
      worst_species = std::max(worst_species, dk);
      if (keep) sp[k].add(coupled.times[s], dk);
    }
  }
  ctx.report.series.push_back(sum_gap);
  for (auto& s : sp) ctx.report.series.push_back(s);
  ctx.report.checks.push_back(make_check(3, "weighted_sum_vs_pme_l1_max", worst_sum, 0.0, 5e-3));
  ctx.report.checks.push_back(make_check(3, "species_vs_fokker_planck_l1_max", worst_species, 0.0, 1e-2));
}

void run_energy(Context& ctx) {
  const ExperimentSpec& spec = ctx.spec;
  const ModelParams& params = spec.model;
  const auto rho0 = project_initial(spec.densities(), spec.grid);
  const Mollifier mol(params.dim, params.eps);
  const SolverConfig cfg = spec.solver();

  Stopwatch sw;
  ctx.stage = "nonlocal PDE solve";
  const FieldTrajectory nl = solve_nonlocal(params, rho0, cfg);
  ctx.stage = "local PDE solve";
  const FieldTrajectory loc = solve_local(params, rho0, cfg);
  ctx.time("solves", sw.seconds());
  ctx.report.snapshots.push_back({"nonlocal", endpoints(nl)});
  ctx.report.snapshots.push_back({"local", endpoints(loc)});

  ctx.stage = "energy evaluation";
  MetricSeries lm{"mollified_lm_power_nonlocal", {}}, ereg{"energy_regularised_nonlocal", {}},
      eloc{"energy_local", {}};
  for (std::size_t s = 0; s < nl.size(); ++s) {
    lm.add(nl.times[s], mollified_lm_power(nl.snapshots[s], params, mol));
    ereg.add(nl.times[s], energy_regularised(nl.snapshots[s], params, mol));
  }
  for (std::size_t s = 0; s < loc.size(); ++s) eloc.add(loc.times[s], energy_local(loc.snapshots[s], params));
  ctx.report.series.push_back(lm);
  ctx.report.series.push_back(ereg);
  ctx.report.series.push_back(eloc);
  ctx.report.checks.push_back(make_check(4, "lm_power_max_relative_increase", max_relative_increase(lm.values()), -inf, 1e-6));
  ctx.report.checks.push_back(make_check(5, "energy_local_max_relative_increase", max_relative_increase(eloc.values()), -inf, 1e-4));
  ctx.report.checks.push_back(make_check(5, "energy_regularised_max_relative_increase", max_relative_increase(ereg.values()), -inf, 1e-4));
}

void run_eps_of_n(Context& ctx) {
  const ExperimentSpec& spec = ctx.spec;
  const ModelParams& params = spec.model;
  const auto densities = spec.densities();
  const auto samplers = make_samplers(densities);
  const auto rho0 = project_initial(densities, spec.grid);
  const double dt = spec.effective_particle_dt();
  const NoiseStream noise(spec.seed);

  ctx.stage = "local PDE solve";
  Stopwatch sw;
  const FieldTrajectory local = solve_local(params, rho0, spec.solver());
  ctx.time("local_solve", sw.seconds());
  ctx.report.snapshots.push_back({"local", endpoints(local)});

  const std::size_t nn = spec.n_values.size();
  const std::size_t nr = static_cast<std::size_t>(spec.replicas);
  std::vector<double> w2(nn * nr);
  ctx.stage = "interacting particle runs";
  Stopwatch sp;
  parallel_for(w2.size(), ctx.options.threads, [&](std::size_t task) {
    const std::size_t a = task / nr, r = task % nr;
    ModelParams p = params;
    p.eps = eps_schedule(static_cast<double>(spec.n_values[a]), p.horizon, p.dim, p.m_exponent);
    const Ensemble ens = run_interacting(p, samplers, spec.n_values[a], dt, noise,
                                         static_cast<std::uint32_t>(r), Mollifier(p.dim, p.eps), spec.grid);
    double sum = 0.0;
    for (std::size_t k = 0; k < ens.positions.size(); ++k) {
      std::vector<double> xs;
      xs.reserve(ens.positions[k].size());
      for (const auto& x : ens.positions[k]) xs.push_back(x[0]);
      sum += w2_to_density_1d(xs, local.back()[k]);
    }
    w2[task] = sum;
  });
  ctx.time("particle_runs", sp.seconds());

  MetricSeries w{"w2_particles_vs_local", {}}, eps{"eps_schedule", {}};
  for (std::size_t a = 0; a < nn; ++a) {
    const double n = static_cast<double>(spec.n_values[a]);
    const MeanStderr ms = mean_stderr(std::span<const double>(w2.data() + a * nr, nr));
    w.add(n, ms.mean, ms.stderr_value);
    eps.add(n, eps_schedule(n, params.horizon, params.dim, params.m_exponent));
  }
  ctx.report.series.push_back(w);
  ctx.report.series.push_back(eps);
  if (nn >= 3) {
    const auto ns = w.abscissae();
    const auto vs = w.values();
    const Spearman s = spearman(ns, vs);
    ctx.report.checks.push_back(make_check(9, "w2_trend_spearman_rho", s.rho, -1.0, std::nextafter(0.0, -1.0)));
  }
}

/// Axis-0 CDF of the initial law convolved with a centred Gaussian of
/// standard deviation s, tabulated and linearly interpolated.
class SmoothedCdf {
 public:
  SmoothedCdf(const InitialDensity& density, double s) : lo_(density.domain().lo) {
    const Box box = density.domain();
    constexpr int slabs = 5000;
    constexpr int nodes = 4001;
    const double w = box.length() / slabs;
    std::vector<double> mid(slabs), mass(slabs);
    for (int j = 0; j < slabs; ++j) {
      const double a = box.lo + j * w;
      mid[j] = a + 0.5 * w;
      mass[j] = density.cell_mass({a, box.lo}, {a + w, box.hi});
    }
    std::vector<double> below(slabs + 1, 0.0);
    for (int j = 0; j < slabs; ++j) below[j + 1] = below[j] + mass[j];
    h_ = box.length() / (nodes - 1);
    table_.resize(nodes);
    const double reach = 10.0 * s;
    for (int i = 0; i < nodes; ++i) {
      const double x = box.lo + i * h_;
      const int j0 = std::clamp(static_cast<int>((x - reach - box.lo) / w), 0, slabs);
      const int j1 = std::clamp(static_cast<int>((x + reach - box.lo) / w) + 1, j0, slabs);
      double f = below[j0];
      for (int j = j0; j < j1; ++j) f += mass[j] * 0.5 * std::erfc(-(x - mid[j]) / (s * std::sqrt(2.0)));
      table_[i] = f;
    }
  }

  double operator()(double x) const {
    const double u = (x - lo_) / h_;
    if (u <= 0.0) return table_.front();
    const auto i = static_cast<std::size_t>(u);
    if (i + 1 >= table_.size()) return table_.back();
    const double f = u - static_cast<double>(i);
    return (1.0 - f) * table_[i] + f * table_[i + 1];
  }

 private:
  double lo_;
  double h_ = 0.0;
  std::vector<double> table_;
};

void run_heat(Context& ctx) {
  const ExperimentSpec& spec = ctx.spec;
  ModelParams params = spec.model;
  std::fill(params.b.begin(), params.b.end(), 0.0);
  const auto densities = spec.densities();
  const auto rho0 = project_initial(densities, spec.grid);
  const SolverConfig cfg = spec.solver();
  const double t = params.horizon;

  Stopwatch sw;
  ctx.stage = "heat solves";
  const FieldTrajectory nl = solve_nonlocal(params, rho0, cfg);
  const FieldTrajectory loc = solve_local(params, rho0, cfg);
  std::vector<FieldTrajectory> pme;
  for (const auto& r : rho0) pme.push_back(solve_pme(0.0, params.sigma, params.m_exponent, r, t, cfg));
  ctx.time("pde_solves", sw.seconds());
  ctx.report.snapshots.push_back({"nonlocal", endpoints(nl)});

  MetricSeries e_nl{"heat_l1_error_nonlocal", {}}, e_loc{"heat_l1_error_local", {}}, e_pme{"heat_l1_error_pme", {}};
  double worst = 0.0;
  for (std::size_t k = 0; k < rho0.size(); ++k) {
    const ScalarField exact = heat_exact(rho0[k], params.sigma, t);
    const double a = l1_distance(nl.back()[k], exact);
    const double b = l1_distance(loc.back()[k], exact);
    const double c = l1_distance(pme[k].back()[0], exact);
    e_nl.add(static_cast<double>(k + 1), a);
    e_loc.add(static_cast<double>(k + 1), b);
    e_pme.add(static_cast<double>(k + 1), c);
    worst = std::max({worst, a, b, c});
  }
  ctx.report.series.push_back(e_nl);
  ctx.report.series.push_back(e_loc);
  ctx.report.series.push_back(e_pme);
  ctx.report.checks.push_back(make_check(6, "heat_pde_l1_max", worst, 0.0, 1e-3));

  ctx.stage = "driftless particles";
  Stopwatch sp;
  const NoiseStream noise(spec.seed);
  const auto samplers = make_samplers(densities);
  const double dt = spec.effective_particle_dt();
  const auto steps = static_cast<std::size_t>(std::llround(t / dt));
  if (steps == 0 || std::abs(static_cast<double>(steps) * dt - t) > 1e-9)
    throw ConfigError("particle_dt must divide the horizon");
  Ensemble ens = make_ensemble(params, samplers, spec.particles, noise, 0);
  const Drift zero = particle_drift(ens, Mollifier(params.dim, params.eps), spec.grid);
  for (std::size_t s = 0; s < steps; ++s) em_step(ens, zero, dt, noise, spec.grid.box);
  ctx.time("particles", sp.seconds());

  MetricSeries ks{"heat_particle_ks", {}};
  double worst_ks = 0.0;
  const double spread = std::sqrt(2.0 * params.sigma * t);
  for (std::size_t k = 0; k < densities.size(); ++k) {
    const SmoothedCdf cdf(densities[k], spread);
    std::vector<double> xs;
    for (const auto& x : ens.positions[k]) xs.push_back(x[0]);
    const double d = ks_statistic(xs, [&](double x) { return cdf(x); });
    ks.add(static_cast<double>(k + 1), d);
    worst_ks = std::max(worst_ks, d);
  }
  ctx.report.series.push_back(ks);
  ctx.report.checks.push_back(make_check(6, "heat_particle_ks_max", worst_ks, 0.0, 0.02));
}

}  // namespace

RunReport run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  RunReport report;
  report.spec = spec;
  Context ctx{spec, options, report, "validation"};
  Stopwatch total;
  try {
    spec.validate();
    switch (spec.kind) {
      case ExperimentKind::poc_vs_N: run_poc_vs_n(ctx); break;
      case ExperimentKind::nonlocal_to_local: run_nonlocal_to_local(ctx); break;
      case ExperimentKind::same_mobility_check: run_same_mobility(ctx); break;
      case ExperimentKind::energy_dissipation: run_energy(ctx); break;
      case ExperimentKind::eps_of_N_combined: run_eps_of_n(ctx); break;
      case ExperimentKind::heat_oracle: run_heat(ctx); break;
    }
  } catch (const Error& e) {
    report.error = to_string(spec.kind) + ": " + ctx.stage + ": " + e.what();
    report.checks.push_back(make_check(0, "run_completed", 0.0, 1.0, 1.0));
  }
  report.timings.emplace_back("total", total.seconds());
  return report;
}

namespace {

using detail::format_double;

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing: " + std::strerror(errno));
  out << content;
  out.close();
  if (!out) throw Error("write to '" + path.string() + "' failed: " + std::strerror(errno));
}

}  // namespace

std::string report_csv(const RunReport& report) {
  std::ostringstream out;
  out << "series_label,abscissa,value,stderr\n";
  for (const auto& s : report.series)
    for (const auto& p : s.points) {
      out << s.label << ',' << format_double(p.abscissa) << ',' << format_double(p.value) << ',';
      if (p.stderr_value) out << format_double(*p.stderr_value);
      out << '\n';
    }
  return out.str();
}

std::string fits_csv(const RunReport& report) {
  std::ostringstream out;
  out << "series_label,slope,intercept,r_squared\n";
  for (const auto& [label, fit] : report.fits)
    out << label << ',' << format_double(fit.slope) << ',' << format_double(fit.intercept) << ','
        << format_double(fit.r_squared) << '\n';
  return out.str();
}

std::string checks_csv(const RunReport& report) {
  std::ostringstream out;
  out << "criterion,name,value,lower,upper,passed\n";
  for (const auto& c : report.checks)
    out << c.criterion << ',' << c.name << ',' << format_double(c.value) << ',' << format_double(c.lower) << ','
        << format_double(c.upper) << ',' << (c.passed ? "true" : "false") << '\n';
  return out.str();
}

std::string manifest_text(const RunReport& report) {
  std::ostringstream out;
  out << "# crossdiff " << version() << '\n';
  out << "# experiment " << to_string(report.spec.kind) << ", seed " << report.spec.seed << '\n';
  for (const auto& [name, s] : report.timings) out << "# timing " << name << " = " << format_double(s) << " s\n";
  if (!report.error.empty()) out << "# error: " << report.error << '\n';
  out << "# status: " << (report.passed() ? "pass" : "fail") << "\n\n";
  out << serialize(report.spec);
  return out.str();
}

void write_report(const RunReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create '" + dir + "': " + ec.message());
  write_file(fs::path(dir) / "report.csv", report_csv(report));
  write_file(fs::path(dir) / "fits.csv", fits_csv(report));
  write_file(fs::path(dir) / "checks.csv", checks_csv(report));
  write_file(fs::path(dir) / "manifest.txt", manifest_text(report));
  const fs::path snap = fs::path(dir) / "snapshots";
  fs::create_directories(snap, ec);
  if (ec) throw Error("cannot create '" + snap.string() + "': " + ec.message());
  for (const auto& t : report.snapshots) write_trajectory(snap.string(), t.name, t.trajectory);
}

}  // namespace crossdiff
