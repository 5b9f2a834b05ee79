#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "crossdiff/kernel.hpp"
#include "crossdiff/types.hpp"

namespace crossdiff {

/// Uniform cell-centred grid on the hypercube [lo, hi]^dim; axis 0 varies
/// fastest in flat indices.
struct GridSpec {
  int dim = 1;
  int cells = 256;  ///< per axis
  Box box{-2.0, 3.0};

  void validate() const;

  double spacing() const { return box.length() / cells; }
  double cell_volume() const;
  std::size_t size() const;
  Point center(std::size_t flat) const;
  double center_coord(int i) const { return box.lo + (i + 0.5) * spacing(); }

  /// Kernel radius `eps` measured in cells must be at least 3.
  bool resolves(double eps) const { return eps >= 3.0 * spacing() * (1.0 - 1e-12); }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct ScalarField {
  GridSpec grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const GridSpec& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}

  /// Cell quadrature sum(v) * dx^d.
  double mass() const;
};

/// One dim-vector per grid location; components[a] holds axis a. Whether
/// the locations are cell centres or faces depends on the producer.
struct VectorField {
  GridSpec grid;
  std::array<std::vector<double>, 2> components;

  VectorField() = default;
  explicit VectorField(const GridSpec& g);
};

/// Sampled convolution kernel on the offsets -radius..radius (per axis),
/// optionally shifted by half a cell along one axis.
struct DiscreteKernel {
  int dim = 1;
  int radius = 0;
  std::vector<double> weights;  ///< (2R+1)^dim, axis 0 fastest

  double at(int ox, int oy = 0) const {
    const int w = 2 * radius + 1;
    return weights[(ox + radius) + (dim > 1 ? (oy + radius) * w : 0)];
  }
};

/// V^eps sampled at the grid offsets times dx^d, normalised to unit sum.
DiscreteKernel mollifier_kernel(const Mollifier& mol, const GridSpec& grid);

/// Component `axis` of grad V^eps times dx^d at the grid offsets, shifted by
/// +dx/2 along `axis` when `staggered` (face-centred output).
DiscreteKernel gradient_kernel(const Mollifier& mol, const GridSpec& grid, int axis,
                               bool staggered);

enum class ConvolutionMethod { automatic, spectral, direct };

/// out_i = sum_o K_o f_{i-o} with the field mirrored across the box edges.
ScalarField convolve_direct(const ScalarField& field, const DiscreteKernel& kernel);
/// Same sum evaluated by FFT on the guard-band padded array.
ScalarField convolve_spectral(const ScalarField& field, const DiscreteKernel& kernel);
ScalarField convolve(const ScalarField& field, const DiscreteKernel& kernel,
                     ConvolutionMethod method = ConvolutionMethod::automatic);

/// V^eps * field on cell centres.
ScalarField convolve(const ScalarField& field, const Mollifier& mol,
                     ConvolutionMethod method = ConvolutionMethod::automatic);

enum class Placement { centers, faces };

/// grad V^eps * field. With Placement::faces component a is sampled at the
/// face between cell i and cell i + e_a.
VectorField convolve_gradient(const ScalarField& field, const Mollifier& mol,
                              Placement placement = Placement::centers,
                              ConvolutionMethod method = ConvolutionMethod::automatic);

/// (1/N) sum_j V^eps(x - X_j) on cell centres, each particle's footprint
/// normalised to unit cell-quadrature mass. Throws BoundaryEscape for
/// particles outside the box.
ScalarField deposit(std::span<const Point> positions, const Mollifier& mol, const GridSpec& grid);

/// Multilinear interpolation between cell centres (clamped within half a
/// cell of the edge). DomainError outside the box.
double interpolate(const ScalarField& field, const Point& x);
Point interpolate(const VectorField& field, const Point& x);

/// (sum |v|^p dx^d)^(1/p), p >= 1.
double lp_norm(const ScalarField& field, double p);

/// L1 distance between two fields on the same grid.
double l1_distance(const ScalarField& a, const ScalarField& b);

/// Samples a function at cell centres.
template <class F>
ScalarField sample_on_grid(const GridSpec& grid, F&& f) {
  ScalarField out(grid);
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = f(grid.center(i));
  return out;
}

/// Grid snapshot format: a text line
///   "CDLGRID dim cells_per_axis box_min box_max time\n"
/// followed by the cell values as little-endian IEEE-754 doubles.
void write_grid(std::ostream& out, const ScalarField& field, double time);
ScalarField read_grid(std::istream& in, double* time = nullptr);
void write_grid_file(const std::string& path, const ScalarField& field, double time);
ScalarField read_grid_file(const std::string& path, double* time = nullptr);

}  // namespace crossdiff
