#include "crossdiff/pde.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "crossdiff/error.hpp"
#include "fft_detail.hpp"

namespace crossdiff {

ScalarField weighted_sum(const std::vector<ScalarField>& fields, const std::vector<double>& a) {
  if (fields.empty()) throw ConfigError("weighted_sum: no fields");
  if (a.size() != fields.size()) throw ConfigError("weighted_sum: weight count mismatch");
  ScalarField out(fields.front().grid);
  for (std::size_t k = 0; k < fields.size(); ++k)
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += a[k] * fields[k].values[i];
  return out;
}

namespace {

inline double pow_nonneg(double x, double e) {
  x = std::max(x, 0.0);
  if (e == 1.0) return x;
  if (e == 2.0) return x * x;
  return std::pow(x, e);
}

inline double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return a > 0.0 ? std::min(a, b) : std::max(a, b);
}

// Face differences (p[i+e_a] - p[i]) / h; the last face along each axis is
// the no-flux boundary and stays zero.
VectorField difference_gradient(const ScalarField& p) {
  const GridSpec& g = p.grid;
  VectorField out(g);
  const int n = g.cells;
  const double inv_h = 1.0 / g.spacing();
  const std::size_t total = g.size();
  for (int a = 0; a < g.dim; ++a) {
    const std::size_t stride = a == 0 ? 1 : static_cast<std::size_t>(n);
    auto& comp = out.components[a];
    for (std::size_t idx = 0; idx < total; ++idx) {
      const int coord = a == 0 ? static_cast<int>(idx % n) : static_cast<int>(idx / n);
      if (coord < n - 1) comp[idx] = (p.values[idx + stride] - p.values[idx]) * inv_h;
    }
  }
  return out;
}

double max_face_speed(const VectorField& grad) {
  const int n = grad.grid.cells;
  double vmax = 0.0;
  for (int a = 0; a < grad.grid.dim; ++a) {
    const auto& comp = grad.components[a];
    for (std::size_t idx = 0; idx < comp.size(); ++idx) {
      const int coord = a == 0 ? static_cast<int>(idx % n) : static_cast<int>(idx / n);
      if (coord < n - 1) vmax = std::max(vmax, std::abs(comp[idx]));
    }
  }
  return vmax;
}

double boundary_mass_fraction(const ScalarField& rho) {
  const GridSpec& g = rho.grid;
  const Box core = g.box.core(0.8);
  double outside = 0.0, total = 0.0;
  for (std::size_t i = 0; i < rho.values.size(); ++i) {
    const double v = rho.values[i];
    total += v;
    if (!core.contains(g.center(i), g.dim)) outside += v;
  }
  return total > 0.0 ? outside / total : 0.0;
}

// Explicit conservative finite-volume update shared by every solver.
class Stepper {
 public:
  Stepper(const GridSpec& grid, double sigma, Reconstruction rec)
      : g_(grid), sigma_(sigma), rec_(rec), delta_(grid.size()), slope_(grid.size()) {}

  // rho += dt * [div(rho * (-b grad)) + sigma lap rho], grad on faces.
  void advance(ScalarField& rho, const VectorField& grad, double b, double dt, double& defect) {
    const int n = g_.cells;
    const double h = g_.spacing();
    const std::size_t total = g_.size();
    const auto& v = rho.values;
    std::fill(delta_.begin(), delta_.end(), 0.0);
    for (int a = 0; a < g_.dim; ++a) {
      const std::size_t stride = a == 0 ? 1 : static_cast<std::size_t>(n);
      auto coord = [&](std::size_t idx) {
        return a == 0 ? static_cast<int>(idx % n) : static_cast<int>(idx / n);
      };
      if (rec_ == Reconstruction::minmod) {
        for (std::size_t idx = 0; idx < total; ++idx) {
          const int c = coord(idx);
          slope_[idx] = (c == 0 || c == n - 1)
                            ? 0.0
                            : minmod(v[idx] - v[idx - stride], v[idx + stride] - v[idx]);
        }
      }
      const auto& gcomp = grad.components[a];
      for (std::size_t idx = 0; idx < total; ++idx) {
        if (coord(idx) == n - 1) continue;
        const std::size_t nb = idx + stride;
        const double vel = -b * gcomp[idx];
        double left = v[idx], right = v[nb];
        if (rec_ == Reconstruction::minmod) {
          left += 0.5 * slope_[idx];
          right -= 0.5 * slope_[nb];
        }
        const double flux = (vel > 0.0 ? vel * left : vel * right) - sigma_ * (v[nb] - v[idx]) / h;
        delta_[idx] -= flux;
        delta_[nb] += flux;
      }
    }
    const double c = dt / h;
    for (std::size_t idx = 0; idx < total; ++idx) {
      double nv = v[idx] + c * delta_[idx];
      if (nv < 0.0) {
        if (nv < -1e-12) {
          std::ostringstream msg;
          msg << "finite-volume update produced " << nv << " in cell " << idx;
          throw SchemeFailure(msg.str());
        }
        defect += -nv * g_.cell_volume();
        nv = 0.0;
      }
      rho.values[idx] = nv;
    }
  }

 private:
  GridSpec g_;
  double sigma_;
  Reconstruction rec_;
  std::vector<double> delta_;
  std::vector<double> slope_;
};

struct StepPlan {
  std::size_t steps;
  double dt;
};

StepPlan plan_steps(double horizon, double dt) {
  if (!(dt > 0.0)) throw StepSizeError("time step must be positive");
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  return {std::max<std::size_t>(steps, 1), horizon / std::max<std::size_t>(steps, 1)};
}

// Face gradient of the potential plus the largest pressure value, which
// sets the nonlinear diffusivity b (m-1) P hidden in the advective flux.
struct Drive {
  VectorField grad;
  double pressure_max = 0.0;
};

double field_max(const ScalarField& f) { return *std::max_element(f.values.begin(), f.values.end()); }

// Runs `steps` updates; drive_of(step, rho) returns the shared potential
// gradient, species k moves with velocity -b[k] * grad. `slope` is m - 1
// for the nonlinear solvers and 0 for a frozen pressure.
template <class DriveFn>
FieldTrajectory integrate(std::vector<ScalarField> rho, const std::vector<double>& b, double sigma,
                          double slope, StepPlan plan, const SolverConfig& cfg, DriveFn&& drive_of) {
  if (cfg.output_every < 1) throw ConfigError("solver: output_every must be at least 1");
  const GridSpec& g = cfg.grid;
  Stepper stepper(g, sigma, cfg.reconstruction);
  const double bmax = *std::max_element(b.begin(), b.end());
  FieldTrajectory traj;
  traj.dt = plan.dt;
  traj.output_every = cfg.output_every;
  traj.steps = plan.steps;
  traj.times.push_back(0.0);
  traj.snapshots.push_back(rho);
  for (std::size_t s = 0; s < plan.steps; ++s) {
    const Drive drive = drive_of(s, rho);
    const VectorField& grad = drive.grad;
    const double vmax = bmax * max_face_speed(grad);
    const double diffusivity = sigma + bmax * slope * drive.pressure_max;
    const double limit = stable_dt(g, diffusivity, vmax, cfg.cfl_safety);
    if (plan.dt > limit * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "step " << s << ": dt = " << plan.dt << " exceeds the stability bound " << limit
          << " (max speed " << vmax << ", diffusivity " << diffusivity << ")";
      throw StepSizeError(msg.str());
    }
    for (std::size_t k = 0; k < rho.size(); ++k) {
      stepper.advance(rho[k], grad, b[k], plan.dt, traj.clamp_defect);
      if (boundary_mass_fraction(rho[k]) > cfg.boundary_mass_limit) {
        std::ostringstream msg;
        msg << "species " << k << " reached the boundary band at step " << s + 1;
        throw BoundaryEscape(msg.str());
      }
    }
    const std::size_t done = s + 1;
    if (done % static_cast<std::size_t>(cfg.output_every) == 0 || done == plan.steps) {
      traj.times.push_back(static_cast<double>(done) * plan.dt);
      traj.snapshots.push_back(rho);
    }
  }
  return traj;
}

void check_initial(const std::vector<ScalarField>& rho0, const SolverConfig& cfg) {
  cfg.grid.validate();
  if (rho0.empty()) throw ConfigError("solver: no initial fields");
  for (const auto& f : rho0) {
    if (!(f.grid == cfg.grid)) throw ConfigError("solver: initial field grid differs from solver grid");
    for (double v : f.values)
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("solver: initial data must be finite and nonnegative");
  }
  if (!(cfg.cfl_safety > 0.0 && cfg.cfl_safety <= 1.0)) throw ConfigError("solver: cfl_safety must lie in (0, 1]");
}

Drive nonlocal_drive(const std::vector<ScalarField>& rho, const ModelParams& params, const Mollifier& mol) {
  const ScalarField p = nonlocal_pressure(rho, params, mol);
  return {difference_gradient(convolve(p, mollifier_kernel(mol, p.grid))), field_max(p)};
}

Drive local_drive(const std::vector<ScalarField>& rho, const ModelParams& params) {
  const ScalarField p = power(weighted_sum(rho, params.a), params.m_exponent - 1.0);
  return {difference_gradient(p), field_max(p)};
}

Drive pme_drive(const ScalarField& u, double m) {
  const ScalarField p = power(u, m - 1.0);
  return {difference_gradient(p), field_max(p)};
}

}  // namespace

ScalarField power(const ScalarField& f, double exponent) {
  ScalarField out(f.grid);
  for (std::size_t i = 0; i < f.values.size(); ++i) out.values[i] = pow_nonneg(f.values[i], exponent);
  return out;
}

ScalarField nonlocal_pressure(const std::vector<ScalarField>& rho, const ModelParams& params,
                              const Mollifier& mol) {
  const DiscreteKernel kernel = mollifier_kernel(mol, rho.front().grid);
  std::vector<ScalarField> u;
  u.reserve(rho.size());
  for (const auto& r : rho) u.push_back(convolve(r, kernel));
  return power(weighted_sum(u, params.a), params.m_exponent - 1.0);
}

double stable_dt(const GridSpec& grid, double diffusivity, double vmax, double cfl_safety) {
  const double h = grid.spacing();
  const double d = grid.dim;
  double bound = std::numeric_limits<double>::infinity();
  if (diffusivity > 0.0) bound = std::min(bound, h * h / (2.0 * d * diffusivity));
  if (vmax > 0.0) bound = std::min(bound, h / (2.0 * d * vmax));
  return cfl_safety * bound;
}

namespace {

double margin_dt(const SolverConfig& cfg, double sigma, double bmax, double slope, const Drive& drive) {
  constexpr double speed_margin = 1.5;
  constexpr double diffusivity_margin = 1.1;
  return stable_dt(cfg.grid, sigma + diffusivity_margin * bmax * slope * drive.pressure_max,
                   speed_margin * bmax * max_face_speed(drive.grad), cfg.cfl_safety);
}

}  // namespace

double suggest_dt(Level level, const ModelParams& params, const std::vector<ScalarField>& rho0,
                  const SolverConfig& cfg) {
  check_initial(rho0, cfg);
  const Drive drive = level == Level::nonlocal
                          ? nonlocal_drive(rho0, params, Mollifier(params.dim, params.eps))
                          : local_drive(rho0, params);
  const double bmax = *std::max_element(params.b.begin(), params.b.end());
  return margin_dt(cfg, params.sigma, bmax, params.m_exponent - 1.0, drive);
}

FieldTrajectory solve_nonlocal(const ModelParams& params, const std::vector<ScalarField>& rho0,
                               const SolverConfig& cfg) {
  params.validate();
  check_initial(rho0, cfg);
  if (static_cast<int>(rho0.size()) != params.n_species) throw ConfigError("solve_nonlocal: species count mismatch");
  const Mollifier mol(params.dim, params.eps);
  if (!cfg.grid.resolves(params.eps)) throw ConfigError("solve_nonlocal: grid does not resolve eps (need eps >= 3 dx)");
  const double dt = cfg.dt > 0.0 ? cfg.dt : suggest_dt(Level::nonlocal, params, rho0, cfg);
  return integrate(rho0, params.b, params.sigma, params.m_exponent - 1.0, plan_steps(params.horizon, dt), cfg,
                   [&](std::size_t, const std::vector<ScalarField>& rho) { return nonlocal_drive(rho, params, mol); });
}

FieldTrajectory solve_local(const ModelParams& params, const std::vector<ScalarField>& rho0,
                            const SolverConfig& cfg) {
  params.validate();
  check_initial(rho0, cfg);
  if (static_cast<int>(rho0.size()) != params.n_species) throw ConfigError("solve_local: species count mismatch");
  const double dt = cfg.dt > 0.0 ? cfg.dt : suggest_dt(Level::local, params, rho0, cfg);
  return integrate(rho0, params.b, params.sigma, params.m_exponent - 1.0, plan_steps(params.horizon, dt), cfg,
                   [&](std::size_t, const std::vector<ScalarField>& rho) { return local_drive(rho, params); });
}

FieldTrajectory solve_pme(double b, double sigma, double m, const ScalarField& u0, double horizon,
                          const SolverConfig& cfg) {
  if (!(b >= 0.0) || !(sigma > 0.0) || !(m >= 2.0) || !(horizon > 0.0))
    throw ConfigError("solve_pme: need b >= 0, sigma > 0, m >= 2, horizon > 0");
  const std::vector<ScalarField> rho0{u0};
  check_initial(rho0, cfg);
  const double dt = cfg.dt > 0.0 ? cfg.dt : margin_dt(cfg, sigma, b, m - 1.0, pme_drive(u0, m));
  return integrate(rho0, {b}, sigma, m - 1.0, plan_steps(horizon, dt), cfg,
                   [&](std::size_t, const std::vector<ScalarField>& u) { return pme_drive(u.front(), m); });
}

FieldTrajectory solve_fokker_planck(double b, double sigma, const FieldTrajectory& pressure,
                                    const std::vector<ScalarField>& rho0, const SolverConfig& cfg) {
  if (!(b >= 0.0) || !(sigma > 0.0)) throw ConfigError("solve_fokker_planck: need b >= 0, sigma > 0");
  check_initial(rho0, cfg);
  if (pressure.size() < 2 || pressure.output_every != 1)
    throw ConfigError("solve_fokker_planck: pressure trajectory must hold every solver step");
  const double horizon = pressure.times.back();
  const double dt = cfg.dt > 0.0 ? cfg.dt : pressure.dt;
  const StepPlan plan = plan_steps(horizon, dt);
  if (plan.steps + 1 != pressure.size() || std::abs(plan.dt - pressure.dt) > 1e-12 * pressure.dt)
    throw ConfigError("solve_fokker_planck: pressure trajectory does not match the solver steps");
  for (std::size_t s = 0; s < pressure.size(); ++s)
    if (pressure.snapshots[s].size() != 1 || !(pressure.snapshots[s][0].grid == cfg.grid))
      throw ConfigError("solve_fokker_planck: pressure snapshots must be single fields on the solver grid");
  std::vector<double> mob(rho0.size(), b);
  return integrate(rho0, mob, sigma, 0.0, plan, cfg, [&](std::size_t s, const std::vector<ScalarField>&) {
    return Drive{difference_gradient(pressure.snapshots[s][0]), 0.0};
  });
}

ScalarField heat_exact(const ScalarField& rho0, double sigma, double t) {
  if (!(t >= 0.0)) throw DomainError("heat_exact: t must be nonnegative");
  if (t == 0.0) return rho0;
  const double spread = std::sqrt(2.0 * sigma * t);
  const int pad = static_cast<int>(std::ceil(12.0 * spread / rho0.grid.spacing())) + 4;
  return detail::apply_fourier_multiplier(rho0, pad, [&](double kx, double ky) {
    return std::exp(-sigma * t * (kx * kx + ky * ky));
  });
}

std::vector<ScalarField> project_initial(const std::vector<InitialDensity>& densities,
                                         const GridSpec& grid) {
  grid.validate();
  std::vector<ScalarField> out;
  const double h = grid.spacing();
  for (const auto& d : densities) {
    if (d.dim() != grid.dim) throw ConfigError("project_initial: density and grid dimensions differ");
    ScalarField f(grid);
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      const Point c = grid.center(i);
      Point lo{c[0] - 0.5 * h, c[1] - 0.5 * h};
      Point hi{c[0] + 0.5 * h, c[1] + 0.5 * h};
      f.values[i] = d.cell_mass(lo, hi) / grid.cell_volume();
    }
    out.push_back(std::move(f));
  }
  return out;
}

TestFunction constant_test_function(double c) {
  return {"constant",
          [c](double, const Point&) { return c; },
          [](double, const Point&) { return 0.0; },
          [](double, const Point&) { return Point{0.0, 0.0}; },
          [](double, const Point&) { return 0.0; }};
}

TestFunction coordinate_test_function(int axis) {
  return {"x" + std::to_string(axis + 1),
          [axis](double, const Point& x) { return x[axis]; },
          [](double, const Point&) { return 0.0; },
          [axis](double, const Point&) {
            Point g{0.0, 0.0};
            g[axis] = 1.0;
            return g;
          },
          [](double, const Point&) { return 0.0; }};
}

std::vector<TestFunction> test_function_library(int dim, const Point& center, double width) {
  const double w2 = width * width;
  auto r2 = [=](const Point& x) {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) s += (x[a] - center[a]) * (x[a] - center[a]);
    return s;
  };
  auto gauss = [=](const Point& x) { return std::exp(-0.5 * r2(x) / w2); };
  auto gauss_grad = [=](const Point& x) {
    const double gv = gauss(x);
    Point g{-(x[0] - center[0]) / w2 * gv, 0.0};
    if (dim > 1) g[1] = -(x[1] - center[1]) / w2 * gv;
    return g;
  };
  auto gauss_lap = [=](const Point& x) { return (r2(x) / (w2 * w2) - dim / w2) * gauss(x); };

  std::vector<TestFunction> lib;
  lib.push_back({"gauss", [=](double, const Point& x) { return gauss(x); },
                 [](double, const Point&) { return 0.0; },
                 [=](double, const Point& x) { return gauss_grad(x); },
                 [=](double, const Point& x) { return gauss_lap(x); }});
  lib.push_back({"x1_gauss", [=](double, const Point& x) { return (x[0] - center[0]) * gauss(x); },
                 [](double, const Point&) { return 0.0; },
                 [=](double, const Point& x) {
                   const double y = x[0] - center[0];
                   Point gg = gauss_grad(x);
                   return Point{gauss(x) + y * gg[0], y * gg[1]};
                 },
                 [=](double, const Point& x) {
                   const double y = x[0] - center[0];
                   return 2.0 * gauss_grad(x)[0] + y * gauss_lap(x);
                 }});
  lib.push_back({"x1sq_gauss",
                 [=](double, const Point& x) {
                   const double y = x[0] - center[0];
                   return y * y * gauss(x);
                 },
                 [](double, const Point&) { return 0.0; },
                 [=](double, const Point& x) {
                   const double y = x[0] - center[0];
                   Point gg = gauss_grad(x);
                   return Point{2.0 * y * gauss(x) + y * y * gg[0], y * y * gg[1]};
                 },
                 [=](double, const Point& x) {
                   const double y = x[0] - center[0];
                   return 2.0 * gauss(x) + 4.0 * y * gauss_grad(x)[0] + y * y * gauss_lap(x);
                 }});
  lib.push_back({"growing_gauss", [=](double t, const Point& x) { return (1.0 + t) * gauss(x); },
                 [=](double, const Point& x) { return gauss(x); },
                 [=](double t, const Point& x) {
                   Point gg = gauss_grad(x);
                   return Point{(1.0 + t) * gg[0], (1.0 + t) * gg[1]};
                 },
                 [=](double t, const Point& x) { return (1.0 + t) * gauss_lap(x); }});
  return lib;
}

namespace {

// Centred differences at cell centres, one-sided at the edges.
VectorField centred_gradient(const ScalarField& p) {
  const GridSpec& g = p.grid;
  VectorField out(g);
  const int n = g.cells;
  const double h = g.spacing();
  for (int a = 0; a < g.dim; ++a) {
    const std::size_t stride = a == 0 ? 1 : static_cast<std::size_t>(n);
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
      const int c = a == 0 ? static_cast<int>(idx % n) : static_cast<int>(idx / n);
      double d;
      if (c == 0)
        d = (p.values[idx + stride] - p.values[idx]) / h;
      else if (c == n - 1)
        d = (p.values[idx] - p.values[idx - stride]) / h;
      else
        d = (p.values[idx + stride] - p.values[idx - stride]) / (2.0 * h);
      out.components[a][idx] = d;
    }
  }
  return out;
}

}  // namespace

std::vector<double> weak_form_residual(const FieldTrajectory& traj, const ModelParams& params,
                                       int species, const std::vector<TestFunction>& tests,
                                       const Mollifier* mol) {
  if (traj.size() < 2) throw ConfigError("weak_form_residual: trajectory needs at least two snapshots");
  if (species < 0 || species >= static_cast<int>(traj.snapshots.front().size()))
    throw ConfigError("weak_form_residual: species out of range");
  const GridSpec& g = traj.snapshots.front()[species].grid;
  const double vol = g.cell_volume();
  const double bk = params.b[species];

  std::vector<VectorField> drive;
  drive.reserve(traj.size());
  for (const auto& snap : traj.snapshots) {
    if (mol) {
      drive.push_back(convolve_gradient(nonlocal_pressure(snap, params, *mol), *mol, Placement::centers));
    } else {
      drive.push_back(centred_gradient(power(weighted_sum(snap, params.a), params.m_exponent - 1.0)));
    }
  }

  std::vector<double> out;
  for (const auto& f : tests) {
    auto pairing = [&](std::size_t s) {
      const double t = traj.times[s];
      const auto& rho = traj.snapshots[s][species].values;
      double value = 0.0, rate = 0.0;
      for (std::size_t i = 0; i < rho.size(); ++i) {
        const Point x = g.center(i);
        const Point gf = f.gradient(t, x);
        Point gp{drive[s].components[0][i], g.dim > 1 ? drive[s].components[1][i] : 0.0};
        value += f.value(t, x) * rho[i];
        rate += (f.time_derivative(t, x) + params.sigma * f.laplacian(t, x) - bk * dot(gf, gp, g.dim)) * rho[i];
      }
      return std::pair{value * vol, rate * vol};
    };
    double integral = 0.0;
    auto [v0, r0] = pairing(0);
    double prev_rate = r0;
    double v_end = v0;
    for (std::size_t s = 1; s < traj.size(); ++s) {
      auto [v, r] = pairing(s);
      integral += 0.5 * (traj.times[s] - traj.times[s - 1]) * (prev_rate + r);
      prev_rate = r;
      v_end = v;
    }
    out.push_back(std::abs(v_end - v0 - integral));
  }
  return out;
}

std::string write_trajectory(const std::string& dir, const std::string& prefix,
                             const FieldTrajectory& traj) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string index_path = (fs::path(dir) / (prefix + "_index.csv")).string();
  std::ofstream index(index_path);
  if (!index) throw Error("cannot open '" + index_path + "' for writing");
  index << "step,time,filename\n";
  for (std::size_t s = 0; s < traj.size(); ++s) {
    const std::size_t step = std::min(s * static_cast<std::size_t>(traj.output_every), traj.steps);
    for (std::size_t k = 0; k < traj.snapshots[s].size(); ++k) {
      std::ostringstream name;
      name << prefix << "_k" << k << "_" << std::setw(6) << std::setfill('0') << step << ".cdlgrid";
      write_grid_file((fs::path(dir) / name.str()).string(), traj.snapshots[s][k], traj.times[s]);
      index << step << ',' << std::setprecision(17) << traj.times[s] << ',' << name.str() << '\n';
    }
  }
  return index_path;
}

}  // namespace crossdiff
