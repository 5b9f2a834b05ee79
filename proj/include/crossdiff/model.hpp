#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "crossdiff/noise.hpp"
#include "crossdiff/types.hpp"

namespace crossdiff {

/// Physical constants of the n-species system
///   d/dt rho_k = b_k div(rho_k grad P) + sigma lap rho_k,  P = (sum a_l rho_l)^(m-1)
/// together with the mollifier width and the time horizon.
struct ModelParams {
  int n_species = 2;
  int dim = 1;
  double m_exponent = 2.0;
  std::vector<double> a{1.0, 1.0};  ///< pressure weights
  std::vector<double> b{1.0, 1.0};  ///< mobilities
  double sigma = 0.05;
  double eps = 0.4;
  double horizon = 0.5;

  /// Throws ConfigError on violated invariants. Mobilities may be zero
  /// (pure diffusion); everything else must be strictly positive.
  void validate() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Isotropic Gaussian mixture, components given by weight/mean/sd.
struct GaussianMixture {
  std::vector<double> weights;
  std::vector<Point> means;
  std::vector<double> sds;
  friend bool operator==(const GaussianMixture&, const GaussianMixture&) = default;
};

/// Indicator of [lower, upper] (per axis) with C-infinity ramps of width
/// `ramp` inside each edge.
struct SmoothedBox {
  Point lower{};
  Point upper{};
  double ramp = 0.1;
  friend bool operator==(const SmoothedBox&, const SmoothedBox&) = default;
};

/// Normalised indicator of [lower, upper] (per axis).
struct UniformBox {
  Point lower{};
  Point upper{};
  friend bool operator==(const UniformBox&, const UniformBox&) = default;
};

using DensityShape = std::variant<GaussianMixture, SmoothedBox, UniformBox>;

std::string shape_kind(const DensityShape& shape);

/// A probability density on a hypercube domain. All three families are
/// separable per axis, which gives exact (or Gauss-Legendre) cell integrals.
class InitialDensity {
 public:
  /// Validates the shape: nonnegative parameters, unit mass on the domain to
  /// 1e-8, and mass outside the central 80% of the domain below 1e-6.
  InitialDensity(int dim, Box domain, DensityShape shape);

  int dim() const { return dim_; }
  const Box& domain() const { return domain_; }
  const DensityShape& shape() const { return shape_; }

  /// Density value; DomainError outside the domain.
  double operator()(const Point& x) const;

  /// Integral over the axis-aligned cell [lo, hi] (per axis).
  double cell_mass(const Point& lo, const Point& hi) const;

  /// Upper bound on the density (used by the rejection sampler).
  double bound() const;

  friend bool operator==(const InitialDensity&, const InitialDensity&) = default;

 private:
  int dim_;
  Box domain_;
  DensityShape shape_;
};

/// Draws i.i.d. samples. One dimension: inverse CDF on a dense quadrature
/// grid. Two dimensions: rejection against a uniform proposal on the domain.
class InitialSampler {
 public:
  explicit InitialSampler(const InitialDensity& density, int table_cells = 1 << 16);

  /// Samples for particles `first .. first+count-1` of (replica, species).
  /// Particle i always receives the same sample regardless of `first`.
  std::vector<Point> sample(std::size_t count, const NoiseStream& noise, std::uint32_t replica,
                            std::uint32_t species, std::uint32_t first = 0) const;

  /// Cumulative distribution along axis 0 of the tabulated law (1-d only).
  double cdf(double x) const;

  double acceptance_rate() const { return acceptance_; }

 private:
  Point draw(const NoiseStream& noise, std::uint32_t replica, std::uint32_t species,
             std::uint32_t particle) const;

  InitialDensity density_;
  std::vector<double> cdf_;  // 1-d table, cdf_[i] at domain.lo + i*h
  double table_h_ = 0.0;
  double acceptance_ = 1.0;
};

double eval_initial_density(const InitialDensity& rho0, const Point& x);

/// Convenience wrapper around InitialSampler; `count` must be >= 1.
std::vector<Point> sample_initial(const InitialDensity& rho0, std::size_t count,
                                  const NoiseStream& noise, std::uint32_t replica = 0,
                                  std::uint32_t species = 0);

}  // namespace crossdiff
