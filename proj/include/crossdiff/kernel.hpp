#pragma once

#include "crossdiff/types.hpp"

namespace crossdiff {

/// Normalising constant of the bump exp(-1/(1-|y|^2)) on the unit ball of
/// R^dim (dim = 1 or 2). Computed once by adaptive quadrature.
double bump_normalisation(int dim);

/// The scaled bump V^eps(x) = eps^-d V(x/eps), V(y) = exp(-1/(1-|y|^2))/Z
/// for |y| < 1 and 0 otherwise.
class Mollifier {
 public:
  Mollifier(int dim, double eps);

  int dim() const { return dim_; }
  double eps() const { return eps_; }

  double value(const Point& x) const;
  Point gradient(const Point& x) const;

  /// Value at the origin, eps^-d * exp(-1) / Z.
  double peak() const;

 private:
  int dim_;
  double eps_;
  double scale_;  // eps^-d / Z
};

inline double eval_v(const Mollifier& mol, const Point& x) { return mol.value(x); }
inline Point eval_grad_v(const Mollifier& mol, const Point& x) { return mol.gradient(x); }

}  // namespace crossdiff
