#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crossdiff/field.hpp"
#include "crossdiff/kernel.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/noise.hpp"

namespace crossdiff {

struct MetricPoint {
  double abscissa = 0.0;
  double value = 0.0;
  std::optional<double> stderr_value;
  friend bool operator==(const MetricPoint&, const MetricPoint&) = default;
};

/// Labelled (abscissa, value) series with strictly monotone abscissae.
struct MetricSeries {
  std::string label;
  std::vector<MetricPoint> points;

  void add(double x, double y, std::optional<double> err = std::nullopt) {
    points.push_back({x, y, err});
  }
  void validate() const;
  std::vector<double> abscissae() const;
  std::vector<double> values() const;
};

/// Least-squares line through (log x, log y).
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

RateFit fit_rate(const MetricSeries& series);

/// Exact 1-d W2 by the sorted (quantile) coupling; equal sample counts.
double w2_empirical_1d(std::span<const double> a, std::span<const double> b);

/// Exact 1-d W2 between an empirical measure and a cell-wise constant
/// density on a 1-d grid (the density is renormalised to unit mass).
double w2_to_density_1d(std::span<const double> samples, const ScalarField& density);

/// Points in R^dim stored contiguously.
struct PointCloud {
  int dim = 1;
  std::vector<double> coords;
  std::size_t size() const { return coords.size() / static_cast<std::size_t>(dim); }
};

/// Root mean of squared 1-d W2 over random unit directions; projection j
/// is drawn from key (stream, j).
double w2_sliced(const PointCloud& a, const PointCloud& b, int n_projections,
                 const NoiseStream& noise, std::uint32_t stream = 0);

/// Discrete measure on at most 200 points (bl_distance limit).
struct DiscreteMeasure {
  int dim = 1;
  std::vector<Point> points;
  std::vector<double> weights;
};

/// sup { sum f (mu - nu) : |f| <= 1, Lip(f) <= 1 }.
double bl_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu);
/// W1 between measures of equal mass (same exact transport solver).
double w1_discrete(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

/// (1/m) int (sum a_k rho_k)^m + sum_k (a_k/b_k) sigma int rho_k log rho_k.
double energy_local(const std::vector<ScalarField>& rho, const ModelParams& params);
/// Same with V^eps * rho_k inside the power term.
double energy_regularised(const std::vector<ScalarField>& rho, const ModelParams& params,
                          const Mollifier& mol);
/// || sum_k a_k V^eps * rho_k ||_{L^m}^m.
double mollified_lm_power(const std::vector<ScalarField>& rho, const ModelParams& params,
                          const Mollifier& mol);

/// eps^(6+2d(m-1)) exp(t / eps^(4+2d(m-1))); +infinity once the exponent
/// exceeds 700.
double coupling_constant(double eps, double t, int dim, double m);

/// eps(N) = (2t / ln N)^(1/(4+2d(m-1))), which makes the exponential factor
/// of coupling_constant equal to sqrt(N).
double eps_schedule(double n, double t, int dim, double m);

/// Sliced-W2 gap on R^(2d) between the law of particle pairs (X^1, X^2)
/// within a replica and the product law obtained by pairing across
/// replicas. `replicas[r]` holds one species' particles of replica r.
double chaos_gap(const std::vector<std::vector<Point>>& replicas, int dim, int marginal,
                 int pairs_per_replica, int n_projections, const NoiseStream& noise);

struct Spearman {
  double rho = 0.0;
  double p_value = 1.0;  ///< one-sided, alternative rho < 0
};

Spearman spearman(std::span<const double> x, std::span<const double> y);

/// sup |F_n - F| for a continuous CDF.
double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf);

struct MeanStderr {
  double mean = 0.0;
  double stderr_value = 0.0;
};

MeanStderr mean_stderr(std::span<const double> values);

}  // namespace crossdiff
