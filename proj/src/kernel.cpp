#include "crossdiff/kernel.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "crossdiff/error.hpp"

namespace crossdiff {

namespace {

double bump(double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; }

double integrate_bump(int dim) {
  using boost::math::quadrature::gauss_kronrod;
  double error = 0.0;
  if (dim == 1) {
    return 2.0 * gauss_kronrod<double, 61>::integrate([](double y) { return bump(y * y); }, 0.0, 1.0,
                                                      30, 1e-14, &error);
  }
  return 2.0 * std::numbers::pi *
         gauss_kronrod<double, 61>::integrate([](double r) { return r * bump(r * r); }, 0.0, 1.0,
                                              30, 1e-14, &error);
}

}  // namespace

double bump_normalisation(int dim) {
  static const double z1 = integrate_bump(1);
  static const double z2 = integrate_bump(2);
  if (dim == 1) return z1;
  if (dim == 2) return z2;
  throw ConfigError("mollifier: dim must be 1 or 2");
}

Mollifier::Mollifier(int dim, double eps) : dim_(dim), eps_(eps) {
  if (!(eps > 0.0)) throw ConfigError("mollifier: eps must be positive");
  scale_ = std::pow(eps, -dim) / bump_normalisation(dim);
}

double Mollifier::value(const Point& x) const {
  const double r2 = norm_sq(x, dim_) / (eps_ * eps_);
  return scale_ * bump(r2);
}

Point Mollifier::gradient(const Point& x) const {
  const double r2 = norm_sq(x, dim_) / (eps_ * eps_);
  if (r2 >= 1.0) return {0.0, 0.0};
  const double q = 1.0 - r2;
  // d/dx exp(-1/(1-|x/e|^2)) = exp(...) * (-2 x / e^2) / q^2
  const double f = -2.0 * scale_ * bump(r2) / (q * q * eps_ * eps_);
  return {f * x[0], dim_ > 1 ? f * x[1] : 0.0};
}

double Mollifier::peak() const { return scale_ * std::exp(-1.0); }

}  // namespace crossdiff
