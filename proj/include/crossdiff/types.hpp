#pragma once

#include <array>
#include <cmath>

namespace crossdiff {

/// A point in R^1 or R^2. In one dimension the second coordinate is unused
/// and kept at zero.
using Point = std::array<double, 2>;

inline double dot(const Point& a, const Point& b, int dim) {
  double s = a[0] * b[0];
  if (dim > 1) s += a[1] * b[1];
  return s;
}

inline double norm_sq(const Point& a, int dim) { return dot(a, a, dim); }

/// Axis-aligned hypercube [lo, hi]^dim.
struct Box {
  double lo = 0.0;
  double hi = 1.0;

  double length() const { return hi - lo; }
  double volume(int dim) const { return dim == 1 ? length() : length() * length(); }

  bool contains(const Point& x, int dim) const {
    for (int a = 0; a < dim; ++a) {
      if (!(x[a] >= lo && x[a] <= hi)) return false;
    }
    return true;
  }

  /// The box shrunk symmetrically to `fraction` of its side length.
  Box core(double fraction) const {
    const double pad = 0.5 * (1.0 - fraction) * length();
    return {lo + pad, hi - pad};
  }

  friend bool operator==(const Box&, const Box&) = default;
};

}  // namespace crossdiff
