#include "crossdiff/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "crossdiff/error.hpp"
#include "crossdiff/pde.hpp"
#include "crossdiff/transport.hpp"

namespace crossdiff {

void MetricSeries::validate() const {
  for (const auto& p : points)
    if (!std::isfinite(p.abscissa) || !std::isfinite(p.value))
      throw StatisticsError("series '" + label + "': non-finite entry");
  if (points.size() < 2) return;
  const bool up = points[1].abscissa > points[0].abscissa;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double d = points[i].abscissa - points[i - 1].abscissa;
    if (up ? !(d > 0.0) : !(d < 0.0))
      throw StatisticsError("series '" + label + "': abscissae are not strictly monotone");
  }
}

std::vector<double> MetricSeries::abscissae() const {
  std::vector<double> out;
  for (const auto& p : points) out.push_back(p.abscissa);
  return out;
}

std::vector<double> MetricSeries::values() const {
  std::vector<double> out;
  for (const auto& p : points) out.push_back(p.value);
  return out;
}

RateFit fit_rate(const MetricSeries& series) {
  series.validate();
  if (series.points.size() < 4) throw StatisticsError("fit_rate: need at least 4 points");
  std::vector<double> lx, ly;
  for (const auto& p : series.points) {
    if (!(p.abscissa > 0.0) || !(p.value > 0.0))
      throw DomainError("fit_rate: log-log fit needs positive abscissae and values");
    lx.push_back(std::log(p.abscissa));
    ly.push_back(std::log(p.value));
  }
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

double w2_empirical_1d(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw SizeError("w2_empirical_1d: sample counts differ");
  if (a.empty()) throw SizeError("w2_empirical_1d: empty samples");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) acc += (sa[i] - sb[i]) * (sa[i] - sb[i]);
  return std::sqrt(acc / static_cast<double>(sa.size()));
}

double w2_to_density_1d(std::span<const double> samples, const ScalarField& density) {
  const GridSpec& g = density.grid;
  if (g.dim != 1) throw ConfigError("w2_to_density_1d: one-dimensional grids only");
  if (samples.empty()) throw SizeError("w2_to_density_1d: empty samples");
  std::vector<double> xs(samples.begin(), samples.end());
  std::sort(xs.begin(), xs.end());
  const double h = g.spacing();
  std::vector<double> mass(g.cells);
  double total = 0.0;
  for (int c = 0; c < g.cells; ++c) {
    mass[c] = std::max(density.values[c], 0.0) * h;
    total += mass[c];
  }
  if (!(total > 0.0)) throw DomainError("w2_to_density_1d: density has no mass");
  for (double& m : mass) m /= total;

  // Merge the quantile breakpoints of both laws and integrate the squared
  // quantile difference exactly (constant minus linear on each piece).
  const double n = static_cast<double>(xs.size());
  double acc = 0.0;
  std::size_t i = 0;
  int c = 0;
  double q = 0.0, cell_q0 = 0.0;
  while (c < g.cells && mass[c] <= 0.0) ++c;
  while (i < xs.size() && c < g.cells) {
    const double q_sample = static_cast<double>(i + 1) / n;
    const double q_cell = cell_q0 + mass[c];
    const double q_next = std::min(q_sample, q_cell);
    const double lo = g.box.lo + c * h;
    auto quantile = [&](double qq) { return lo + (qq - cell_q0) / mass[c] * h; };
    const double e0 = xs[i] - quantile(q);
    const double e1 = xs[i] - quantile(q_next);
    acc += (q_next - q) * (e0 * e0 + e0 * e1 + e1 * e1) / 3.0;
    q = q_next;
    if (q_sample <= q_cell) ++i;
    if (q_cell <= q_sample) {
      cell_q0 = q_cell;
      ++c;
      while (c < g.cells && mass[c] <= 0.0) ++c;
    }
  }
  return std::sqrt(std::max(acc, 0.0));
}

namespace {

std::vector<double> random_direction(int dim, const NoiseStream& noise, std::uint32_t stream,
                                     std::uint32_t j) {
  std::vector<double> u(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (int a = 0; a < dim; a += 2) {
      const auto [z0, z1] =
          noise.normal2({stream, 0, static_cast<std::uint32_t>(a / 2), j, Purpose::projection});
      u[a] = z0;
      if (a + 1 < dim) u[a + 1] = z1;
    }
    for (double v : u) norm += v * v;
  } while (norm == 0.0);
  const double s = 1.0 / std::sqrt(norm);
  for (double& v : u) v *= s;
  return u;
}

}  // namespace

double w2_sliced(const PointCloud& a, const PointCloud& b, int n_projections, const NoiseStream& noise,
                 std::uint32_t stream) {
  if (a.dim != b.dim || a.dim < 1) throw SizeError("w2_sliced: point clouds of different dimension");
  if (a.size() != b.size() || a.size() == 0) throw SizeError("w2_sliced: point counts differ or are zero");
  if (n_projections < 1) throw ConfigError("w2_sliced: need at least one projection");
  const int dim = a.dim;
  const std::size_t n = a.size();
  std::vector<double> pa(n), pb(n);
  double acc = 0.0;
  for (int j = 0; j < n_projections; ++j) {
    const auto u = random_direction(dim, noise, stream, static_cast<std::uint32_t>(j));
    for (std::size_t i = 0; i < n; ++i) {
      double sa = 0.0, sb = 0.0;
      for (int k = 0; k < dim; ++k) {
        sa += u[k] * a.coords[i * dim + k];
        sb += u[k] * b.coords[i * dim + k];
      }
      pa[i] = sa;
      pb[i] = sb;
    }
    const double w = w2_empirical_1d(pa, pb);
    acc += w * w;
  }
  return std::sqrt(acc / n_projections);
}

namespace {

constexpr std::size_t bl_support_limit = 200;

double metric(const Point& x, const Point& y, int dim) {
  const Point d{x[0] - y[0], x[1] - y[1]};
  return std::sqrt(norm_sq(d, dim));
}

void check_measure(const DiscreteMeasure& m) {
  if (m.points.size() != m.weights.size()) throw SizeError("discrete measure: points and weights differ in size");
  for (double w : m.weights)
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("discrete measure: weights must be nonnegative");
}

}  // namespace

double bl_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  check_measure(mu);
  check_measure(nu);
  if (mu.dim != nu.dim) throw SizeError("bl_distance: measures of different dimension");
  if (mu.points.size() > bl_support_limit || nu.points.size() > bl_support_limit)
    throw SizeError("bl_distance: support larger than 200 points, use W2 instead");
  const int dim = mu.dim;
  const double mass_mu = std::accumulate(mu.weights.begin(), mu.weights.end(), 0.0);
  const double mass_nu = std::accumulate(nu.weights.begin(), nu.weights.end(), 0.0);

  // Transport with cost min(|x - y|, 2) after adding an auxiliary point at
  // distance 1 from everything that absorbs the mass imbalance.
  std::vector<double> supply = mu.weights, demand = nu.weights;
  const bool extra_demand = mass_mu >= mass_nu;
  if (extra_demand)
    demand.push_back(mass_mu - mass_nu);
  else
    supply.push_back(mass_nu - mass_mu);
  const std::size_t ns = mu.points.size(), nd = nu.points.size();
  return min_cost_transport(supply, demand, [&](std::size_t i, std::size_t j) {
    if (i == ns || j == nd) return 1.0;
    return std::min(metric(mu.points[i], nu.points[j], dim), 2.0);
  });
}

double w1_discrete(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  check_measure(mu);
  check_measure(nu);
  if (mu.dim != nu.dim) throw SizeError("w1_discrete: measures of different dimension");
  const double mass_mu = std::accumulate(mu.weights.begin(), mu.weights.end(), 0.0);
  const double mass_nu = std::accumulate(nu.weights.begin(), nu.weights.end(), 0.0);
  if (std::abs(mass_mu - mass_nu) > 1e-12 * std::max(1.0, mass_mu))
    throw DomainError("w1_discrete: measures of different mass");
  return min_cost_transport(mu.weights, nu.weights, [&](std::size_t i, std::size_t j) {
    return metric(mu.points[i], nu.points[j], mu.dim);
  });
}

namespace {

double entropy_terms(const std::vector<ScalarField>& rho, const ModelParams& params) {
  double total = 0.0;
  for (std::size_t k = 0; k < rho.size(); ++k) {
    if (!(params.b[k] > 0.0)) throw DomainError("energy: a_k / b_k needs b_k > 0");
    double s = 0.0;
    for (double v : rho[k].values) {
      if (v < 0.0) throw DomainError("energy: density fields must be nonnegative");
      if (v > 1e-300) s += v * std::log(v);
    }
    total += params.a[k] / params.b[k] * params.sigma * s * rho[k].grid.cell_volume();
  }
  return total;
}

double power_term(const std::vector<ScalarField>& u, const ModelParams& params) {
  const ScalarField w = weighted_sum(u, params.a);
  double s = 0.0;
  for (double v : w.values) s += std::pow(std::abs(v), params.m_exponent);
  return s * w.grid.cell_volume();
}

void check_fields(const std::vector<ScalarField>& rho, const ModelParams& params) {
  if (static_cast<int>(rho.size()) != params.n_species) throw ConfigError("energy: species count mismatch");
}

std::vector<ScalarField> mollify(const std::vector<ScalarField>& rho, const Mollifier& mol) {
  std::vector<ScalarField> u;
  for (const auto& r : rho) u.push_back(convolve(r, mol));
  return u;
}

}  // namespace

double energy_local(const std::vector<ScalarField>& rho, const ModelParams& params) {
  check_fields(rho, params);
  const double ent = entropy_terms(rho, params);
  return power_term(rho, params) / params.m_exponent + ent;
}

double energy_regularised(const std::vector<ScalarField>& rho, const ModelParams& params,
                          const Mollifier& mol) {
  check_fields(rho, params);
  const double ent = entropy_terms(rho, params);
  return power_term(mollify(rho, mol), params) / params.m_exponent + ent;
}

double mollified_lm_power(const std::vector<ScalarField>& rho, const ModelParams& params,
                          const Mollifier& mol) {
  check_fields(rho, params);
  return power_term(mollify(rho, mol), params);
}

double coupling_constant(double eps, double t, int dim, double m) {
  if (!(eps > 0.0) || !(t >= 0.0)) throw DomainError("coupling_constant: need eps > 0 and t >= 0");
  const double p_front = 6.0 + 2.0 * dim * (m - 1.0);
  const double p_exp = 4.0 + 2.0 * dim * (m - 1.0);
  const double exponent = t / std::pow(eps, p_exp);
  if (exponent > 700.0) return std::numeric_limits<double>::infinity();
  return std::pow(eps, p_front) * std::exp(exponent);
}

double eps_schedule(double n, double t, int dim, double m) {
  if (!(n >= 3.0)) throw DomainError("eps_schedule: N must be at least 3");
  if (!(t > 0.0)) throw DomainError("eps_schedule: t must be positive");
  const double p_exp = 4.0 + 2.0 * dim * (m - 1.0);
  return std::pow(2.0 * t / std::log(n), 1.0 / p_exp);
}

double chaos_gap(const std::vector<std::vector<Point>>& replicas, int dim, int marginal,
                 int pairs_per_replica, int n_projections, const NoiseStream& noise) {
  if (marginal < 1) throw ConfigError("chaos_gap: marginal order must be positive");
  if (marginal == 1) return 0.0;
  if (replicas.size() < 100) throw StatisticsError("chaos_gap: need at least 100 replicas");
  if (pairs_per_replica < 1) throw ConfigError("chaos_gap: pairs_per_replica must be positive");
  const std::size_t need = static_cast<std::size_t>(marginal) * pairs_per_replica;
  for (const auto& r : replicas)
    if (r.size() < need) throw StatisticsError("chaos_gap: too few particles per replica for disjoint tuples");

  const std::size_t nr = replicas.size();
  const int big = marginal * dim;
  PointCloud joint{big, {}}, product{big, {}};
  for (std::size_t r = 0; r < nr; ++r) {
    for (int p = 0; p < pairs_per_replica; ++p) {
      for (int c = 0; c < marginal; ++c) {
        const std::size_t idx = static_cast<std::size_t>(p) * marginal + c;
        const Point& xj = replicas[r][idx];
        const Point& xp = replicas[(r + c) % nr][idx];
        for (int a = 0; a < dim; ++a) {
          joint.coords.push_back(xj[a]);
          product.coords.push_back(xp[a]);
        }
      }
    }
  }
  return w2_sliced(joint, product, n_projections, noise);
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

Spearman spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw SizeError("spearman: samples differ in size");
  if (x.size() < 3) throw StatisticsError("spearman: need at least 3 pairs");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  Spearman out;
  out.rho = pearson(rx, ry);
  const std::size_t n = x.size();
  if (n <= 8) {
    std::vector<double> perm = ry;
    std::sort(perm.begin(), perm.end());
    std::size_t hits = 0, total = 0;
    do {
      ++total;
      if (pearson(rx, perm) <= out.rho + 1e-12) ++hits;
    } while (std::next_permutation(perm.begin(), perm.end()));
    out.p_value = static_cast<double>(hits) / static_cast<double>(total);
  } else {
    const double df = static_cast<double>(n) - 2.0;
    const double r = std::clamp(out.rho, -1.0 + 1e-15, 1.0 - 1e-15);
    const double t = r * std::sqrt(df / (1.0 - r * r));
    out.p_value = boost::math::cdf(boost::math::students_t(df), t);
  }
  return out;
}

double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw SizeError("ks_statistic: empty samples");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

MeanStderr mean_stderr(std::span<const double> values) {
  if (values.empty()) throw StatisticsError("mean_stderr: no values");
  const double n = static_cast<double>(values.size());
  MeanStderr out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.stderr_value = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

}  // namespace crossdiff
