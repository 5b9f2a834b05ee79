#include "crossdiff/model.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "crossdiff/error.hpp"

namespace crossdiff {

void ModelParams::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("model: " + what); };
  if (n_species < 1) fail("n_species must be positive");
  if (dim != 1 && dim != 2) fail("dim must be 1 or 2");
  if (!(m_exponent >= 2.0)) fail("m_exponent must satisfy m >= 2");
  if (static_cast<int>(a.size()) != n_species) fail("a must have n_species entries");
  if (static_cast<int>(b.size()) != n_species) fail("b must have n_species entries");
  for (double ak : a)
    if (!(ak > 0.0) || !std::isfinite(ak)) fail("pressure weights a_k must be positive");
  for (double bk : b)
    if (!(bk >= 0.0) || !std::isfinite(bk)) fail("mobilities b_k must be nonnegative");
  if (!(sigma > 0.0)) fail("sigma must be positive");
  if (!(eps > 0.0)) fail("eps must be positive");
  if (!(horizon > 0.0)) fail("horizon must be positive");
}

namespace {

double normal_cdf_diff(double a, double b) {
  // P(a < Z < b) without cancellation in either tail.
  constexpr double r2 = std::numbers::sqrt2;
  if (a >= 0.0) return 0.5 * (std::erfc(a / r2) - std::erfc(b / r2));
  if (b <= 0.0) return 0.5 * (std::erfc(-b / r2) - std::erfc(-a / r2));
  return 1.0 - 0.5 * (std::erfc(-a / r2) + std::erfc(b / r2));
}

double smooth_step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double f = std::exp(-1.0 / s);
  const double g = std::exp(-1.0 / (1.0 - s));
  return f / (f + g);
}

// Unnormalised 1-d profile of the smoothed box along one axis.
double ramp_profile(double x, double lo, double hi, double w) {
  if (x <= lo || x >= hi) return 0.0;
  return smooth_step((x - lo) / w) * smooth_step((hi - x) / w);
}

double ramp_integral(double a, double b, double lo, double hi, double w) {
  a = std::max(a, lo);
  b = std::min(b, hi);
  if (!(b > a)) return 0.0;
  double total = 0.0;
  auto piece = [&](double p, double q) {
    p = std::max(p, a);
    q = std::min(q, b);
    if (!(q > p)) return 0.0;
    return boost::math::quadrature::gauss<double, 30>::integrate(
        [&](double x) { return ramp_profile(x, lo, hi, w); }, p, q);
  };
  total += piece(lo, lo + w);
  total += piece(hi - w, hi);
  const double pa = std::max(a, lo + w);
  const double pb = std::min(b, hi - w);
  if (pb > pa) total += pb - pa;
  return total;
}

struct AxisEval {
  int dim;

  double value(const GaussianMixture& g, const Point& x) const {
    double sum = 0.0;
    for (std::size_t c = 0; c < g.weights.size(); ++c) {
      double v = g.weights[c];
      for (int a = 0; a < dim; ++a) {
        const double z = (x[a] - g.means[c][a]) / g.sds[c];
        v *= std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * g.sds[c]);
      }
      sum += v;
    }
    return sum;
  }
  double value(const SmoothedBox& s, const Point& x) const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a)
      v *= ramp_profile(x[a], s.lower[a], s.upper[a], s.ramp) /
           (s.upper[a] - s.lower[a] - s.ramp);
    return v;
  }
  double value(const UniformBox& u, const Point& x) const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) {
      if (x[a] < u.lower[a] || x[a] > u.upper[a]) return 0.0;
      v /= u.upper[a] - u.lower[a];
    }
    return v;
  }

  double mass(const GaussianMixture& g, const Point& lo, const Point& hi) const {
    double sum = 0.0;
    for (std::size_t c = 0; c < g.weights.size(); ++c) {
      double v = g.weights[c];
      for (int a = 0; a < dim; ++a)
        v *= normal_cdf_diff((lo[a] - g.means[c][a]) / g.sds[c], (hi[a] - g.means[c][a]) / g.sds[c]);
      sum += v;
    }
    return sum;
  }
  double mass(const SmoothedBox& s, const Point& lo, const Point& hi) const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a)
      v *= ramp_integral(lo[a], hi[a], s.lower[a], s.upper[a], s.ramp) /
           (s.upper[a] - s.lower[a] - s.ramp);
    return v;
  }
  double mass(const UniformBox& u, const Point& lo, const Point& hi) const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) {
      const double overlap = std::min(hi[a], u.upper[a]) - std::max(lo[a], u.lower[a]);
      if (overlap <= 0.0) return 0.0;
      v *= overlap / (u.upper[a] - u.lower[a]);
    }
    return v;
  }

  double bound(const GaussianMixture& g) const {
    double sum = 0.0;
    for (std::size_t c = 0; c < g.weights.size(); ++c)
      sum += g.weights[c] / std::pow(std::sqrt(2.0 * std::numbers::pi) * g.sds[c], dim);
    return sum;
  }
  double bound(const SmoothedBox& s) const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v /= s.upper[a] - s.lower[a] - s.ramp;
    return v;
  }
  double bound(const UniformBox& u) const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v /= u.upper[a] - u.lower[a];
    return v;
  }
};

void check_shape(int dim, const GaussianMixture& g) {
  if (g.weights.empty()) throw ConfigError("gaussian_mixture: at least one component required");
  if (g.means.size() != g.weights.size() || g.sds.size() != g.weights.size())
    throw ConfigError("gaussian_mixture: weights, means and sds must have equal length");
  double total = 0.0;
  for (std::size_t c = 0; c < g.weights.size(); ++c) {
    if (!(g.weights[c] > 0.0)) throw ConfigError("gaussian_mixture: weights must be positive");
    if (!(g.sds[c] > 0.0)) throw ConfigError("gaussian_mixture: sds must be positive");
    total += g.weights[c];
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("gaussian_mixture: weights must sum to 1");
  (void)dim;
}

void check_shape(int dim, const SmoothedBox& s) {
  if (!(s.ramp > 0.0)) throw ConfigError("smoothed_box: ramp must be positive");
  for (int a = 0; a < dim; ++a)
    if (!(s.upper[a] - s.lower[a] >= 2.0 * s.ramp))
      throw ConfigError("smoothed_box: each side must be at least twice the ramp width");
}

void check_shape(int dim, const UniformBox& u) {
  for (int a = 0; a < dim; ++a)
    if (!(u.upper[a] > u.lower[a])) throw ConfigError("uniform_box: upper must exceed lower");
}

}  // namespace

std::string shape_kind(const DensityShape& shape) {
  struct Name {
    std::string operator()(const GaussianMixture&) const { return "gaussian_mixture"; }
    std::string operator()(const SmoothedBox&) const { return "smoothed_box"; }
    std::string operator()(const UniformBox&) const { return "uniform_box"; }
  };
  return std::visit(Name{}, shape);
}

InitialDensity::InitialDensity(int dim, Box domain, DensityShape shape)
    : dim_(dim), domain_(domain), shape_(std::move(shape)) {
  if (dim_ != 1 && dim_ != 2) throw ConfigError("initial density: dim must be 1 or 2");
  if (!(domain_.hi > domain_.lo)) throw ConfigError("initial density: empty domain box");
  std::visit([&](const auto& s) { check_shape(dim_, s); }, shape_);
  const Point lo{domain_.lo, dim_ > 1 ? domain_.lo : 0.0};
  const Point hi{domain_.hi, dim_ > 1 ? domain_.hi : 0.0};
  const double total = cell_mass(lo, hi);
  if (std::abs(total - 1.0) > 1e-8) {
    std::ostringstream msg;
    msg << "initial density (" << shape_kind(shape_) << "): mass on the domain box is " << total
        << ", expected 1 within 1e-8";
    throw ConfigError(msg.str());
  }
  const Box core = domain_.core(0.8);
  const double core_mass =
      cell_mass({core.lo, dim_ > 1 ? core.lo : 0.0}, {core.hi, dim_ > 1 ? core.hi : 0.0});
  if (1.0 - core_mass >= 1e-6) {
    std::ostringstream msg;
    msg << "initial density (" << shape_kind(shape_) << "): mass " << 1.0 - core_mass
        << " outside the central 80% of the domain exceeds 1e-6";
    throw ConfigError(msg.str());
  }
}

double InitialDensity::operator()(const Point& x) const {
  if (!domain_.contains(x, dim_)) throw DomainError("initial density evaluated outside its domain box");
  return std::visit([&](const auto& s) { return AxisEval{dim_}.value(s, x); }, shape_);
}

double InitialDensity::cell_mass(const Point& lo, const Point& hi) const {
  Point l = lo, h = hi;
  if (dim_ == 1) l[1] = h[1] = 0.0;
  return std::visit([&](const auto& s) { return AxisEval{dim_}.mass(s, l, h); }, shape_);
}

double InitialDensity::bound() const {
  return std::visit([&](const auto& s) { return AxisEval{dim_}.bound(s); }, shape_);
}

double eval_initial_density(const InitialDensity& rho0, const Point& x) { return rho0(x); }

InitialSampler::InitialSampler(const InitialDensity& density, int table_cells) : density_(density) {
  const Box& box = density_.domain();
  if (density_.dim() == 1) {
    if (table_cells < 16) throw ConfigError("sampler: table needs at least 16 cells");
    table_h_ = box.length() / table_cells;
    cdf_.assign(table_cells + 1, 0.0);
    for (int i = 0; i < table_cells; ++i) {
      const double a = box.lo + i * table_h_;
      cdf_[i + 1] = cdf_[i] + density_.cell_mass({a, 0.0}, {a + table_h_, 0.0});
    }
    const double total = cdf_.back();
    for (double& c : cdf_) c /= total;
    cdf_.back() = 1.0;
  } else {
    acceptance_ = 1.0 / (density_.bound() * box.volume(2));
    if (acceptance_ < 1e-3)
      throw ConfigError("sampler: rejection acceptance rate below 1e-3; shrink the domain box");
  }
}

Point InitialSampler::draw(const NoiseStream& noise, std::uint32_t replica, std::uint32_t species,
                           std::uint32_t particle) const {
  const Box& box = density_.domain();
  NoiseKey key{replica, species, particle, 0, Purpose::initial};
  if (density_.dim() == 1) {
    const double u = noise.uniform2(key).first;
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - cdf_.begin(), 1) - 1,
                                                cdf_.size() - 2);
    const double width = cdf_[i + 1] - cdf_[i];
    const double frac = width > 0.0 ? std::clamp((u - cdf_[i]) / width, 0.0, 1.0) : 0.5;
    return {box.lo + (static_cast<double>(i) + frac) * table_h_, 0.0};
  }
  const double bound = density_.bound();
  constexpr std::uint32_t max_attempts = 1u << 24;
  for (std::uint32_t attempt = 0; attempt < max_attempts; ++attempt) {
    key.index = 2 * attempt;
    const auto [ux, uy] = noise.uniform2(key);
    key.index = 2 * attempt + 1;
    const double accept = noise.uniform2(key).first;
    const Point x{box.lo + ux * box.length(), box.lo + uy * box.length()};
    if (accept * bound < density_(x)) return x;
  }
  throw ConfigError("sampler: rejection sampling did not terminate");
}

std::vector<Point> InitialSampler::sample(std::size_t count, const NoiseStream& noise,
                                          std::uint32_t replica, std::uint32_t species,
                                          std::uint32_t first) const {
  if (count < 1) throw ConfigError("sample_initial: count must be at least 1");
  std::vector<Point> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = draw(noise, replica, species, first + static_cast<std::uint32_t>(i));
  return out;
}

double InitialSampler::cdf(double x) const {
  if (density_.dim() != 1) throw DomainError("sampler: cdf is only tabulated in one dimension");
  const Box& box = density_.domain();
  if (x <= box.lo) return 0.0;
  if (x >= box.hi) return 1.0;
  const double s = (x - box.lo) / table_h_;
  const std::size_t i = std::min(static_cast<std::size_t>(s), cdf_.size() - 2);
  const double f = s - static_cast<double>(i);
  return cdf_[i] + f * (cdf_[i + 1] - cdf_[i]);
}

std::vector<Point> sample_initial(const InitialDensity& rho0, std::size_t count,
                                  const NoiseStream& noise, std::uint32_t replica,
                                  std::uint32_t species) {
  if (count < 1) throw ConfigError("sample_initial: count must be at least 1");
  return InitialSampler(rho0).sample(count, noise, replica, species);
}

}  // namespace crossdiff
