#include "crossdiff/field.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include "crossdiff/error.hpp"
#include "fft_detail.hpp"

namespace crossdiff {

void GridSpec::validate() const {
  if (dim != 1 && dim != 2) throw ConfigError("grid: dim must be 1 or 2");
  if (cells < 16) throw ConfigError("grid: cells_per_axis must be at least 16");
  if (!(box.hi > box.lo)) throw ConfigError("grid: empty box");
}

double GridSpec::cell_volume() const {
  const double h = spacing();
  return dim == 1 ? h : h * h;
}

std::size_t GridSpec::size() const {
  const auto n = static_cast<std::size_t>(cells);
  return dim == 1 ? n : n * n;
}

Point GridSpec::center(std::size_t flat) const {
  const auto n = static_cast<std::size_t>(cells);
  if (dim == 1) return {center_coord(static_cast<int>(flat)), 0.0};
  return {center_coord(static_cast<int>(flat % n)), center_coord(static_cast<int>(flat / n))};
}

double ScalarField::mass() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * grid.cell_volume();
}

VectorField::VectorField(const GridSpec& g) : grid(g) {
  components[0].assign(g.size(), 0.0);
  if (g.dim > 1) components[1].assign(g.size(), 0.0);
}

namespace {

int kernel_radius(double eps, double h) { return static_cast<int>(std::ceil(eps / h)) + 1; }

void require_resolved(const Mollifier& mol, const GridSpec& grid) {
  if (mol.dim() != grid.dim) throw ConfigError("mollifier and grid dimensions differ");
  if (!grid.resolves(mol.eps())) {
    std::ostringstream msg;
    msg << "grid does not resolve eps = " << mol.eps() << " (need eps >= 3 dx, dx = "
        << grid.spacing() << ")";
    throw ConfigError(msg.str());
  }
}

inline int mirror(int i, int n) {
  if (i < 0) return -1 - i;
  if (i >= n) return 2 * n - 1 - i;
  return i;
}

int fft_size(int n) {
  for (int m = n;; ++m) {
    int r = m;
    for (int p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double, FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex, FftwFree>;

RealBuffer alloc_real(std::size_t n) {
  return RealBuffer(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
}
ComplexBuffer alloc_complex(std::size_t n) {
  return ComplexBuffer(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
}

struct PlanPair {
  fftw_plan forward;
  fftw_plan backward;
};

// FFTW's planner is not re-entrant; executing a finished plan on new arrays is.
PlanPair plans_for(int dim, int lx, int ly) {
  static std::mutex mutex;
  static std::map<std::array<int, 3>, PlanPair> cache;
  std::lock_guard lock(mutex);
  const std::array<int, 3> key{dim, lx, ly};
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  const std::size_t nreal = static_cast<std::size_t>(lx) * (dim > 1 ? ly : 1);
  const std::size_t ncomplex = static_cast<std::size_t>(lx / 2 + 1) * (dim > 1 ? ly : 1);
  auto r = alloc_real(nreal);
  auto c = alloc_complex(ncomplex);
  PlanPair p{};
  if (dim == 1) {
    p.forward = fftw_plan_dft_r2c_1d(lx, r.get(), c.get(), FFTW_ESTIMATE);
    p.backward = fftw_plan_dft_c2r_1d(lx, c.get(), r.get(), FFTW_ESTIMATE);
  } else {
    p.forward = fftw_plan_dft_r2c_2d(ly, lx, r.get(), c.get(), FFTW_ESTIMATE);
    p.backward = fftw_plan_dft_c2r_2d(ly, lx, c.get(), r.get(), FFTW_ESTIMATE);
  }
  cache.emplace(key, p);
  return p;
}

}  // namespace

DiscreteKernel mollifier_kernel(const Mollifier& mol, const GridSpec& grid) {
  require_resolved(mol, grid);
  const double h = grid.spacing();
  DiscreteKernel k{grid.dim, kernel_radius(mol.eps(), h), {}};
  const int w = 2 * k.radius + 1;
  k.weights.assign(grid.dim == 1 ? w : w * w, 0.0);
  double total = 0.0;
  for (std::size_t idx = 0; idx < k.weights.size(); ++idx) {
    const int ox = static_cast<int>(idx % w) - k.radius;
    const int oy = grid.dim > 1 ? static_cast<int>(idx / w) - k.radius : 0;
    k.weights[idx] = mol.value({ox * h, oy * h});
    total += k.weights[idx];
  }
  for (double& v : k.weights) v /= total;
  return k;
}

DiscreteKernel gradient_kernel(const Mollifier& mol, const GridSpec& grid, int axis, bool staggered) {
  require_resolved(mol, grid);
  if (axis < 0 || axis >= grid.dim) throw DomainError("gradient_kernel: axis out of range");
  const double h = grid.spacing();
  DiscreteKernel k{grid.dim, kernel_radius(mol.eps(), h), {}};
  const int w = 2 * k.radius + 1;
  k.weights.assign(grid.dim == 1 ? w : w * w, 0.0);
  const double vol = grid.cell_volume();
  const double shift = staggered ? 0.5 * h : 0.0;
  for (std::size_t idx = 0; idx < k.weights.size(); ++idx) {
    const int ox = static_cast<int>(idx % w) - k.radius;
    const int oy = grid.dim > 1 ? static_cast<int>(idx / w) - k.radius : 0;
    Point x{ox * h, oy * h};
    x[axis] += shift;
    k.weights[idx] = mol.gradient(x)[axis] * vol;
  }
  return k;
}

ScalarField convolve_direct(const ScalarField& field, const DiscreteKernel& kernel) {
  const GridSpec& g = field.grid;
  const int n = g.cells;
  const int r = kernel.radius;
  if (kernel.dim != g.dim) throw ConfigError("convolve: kernel and field dimensions differ");
  if (r > n) throw ConfigError("convolve: kernel radius exceeds the box");
  ScalarField out(g);
  const auto& f = field.values;
  if (g.dim == 1) {
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int o = -r; o <= r; ++o) s += kernel.weights[o + r] * f[mirror(i - o, n)];
      out.values[i] = s;
    }
    return out;
  }
  const int w = 2 * r + 1;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int oy = -r; oy <= r; ++oy) {
        const int jj = mirror(j - oy, n);
        const double* krow = kernel.weights.data() + (oy + r) * w + r;
        const double* frow = f.data() + static_cast<std::size_t>(jj) * n;
        for (int ox = -r; ox <= r; ++ox) s += krow[ox] * frow[mirror(i - ox, n)];
      }
      out.values[static_cast<std::size_t>(j) * n + i] = s;
    }
  }
  return out;
}

ScalarField convolve_spectral(const ScalarField& field, const DiscreteKernel& kernel) {
  const GridSpec& g = field.grid;
  const int n = g.cells;
  const int r = kernel.radius;
  if (kernel.dim != g.dim) throw ConfigError("convolve: kernel and field dimensions differ");
  if (r > n) throw ConfigError("convolve: kernel radius exceeds the box");
  const int len = fft_size(std::max(n + 2 * r, 2 * r + 1));
  const int lx = len;
  const int ly = g.dim > 1 ? len : 1;
  const std::size_t nreal = static_cast<std::size_t>(lx) * ly;
  const std::size_t ncomplex = static_cast<std::size_t>(lx / 2 + 1) * ly;
  const PlanPair plans = plans_for(g.dim, lx, ly);

  auto padded = alloc_real(nreal);
  auto kern = alloc_real(nreal);
  std::fill_n(padded.get(), nreal, 0.0);
  std::fill_n(kern.get(), nreal, 0.0);
  const int span = n + 2 * r;
  if (g.dim == 1) {
    for (int q = 0; q < span; ++q) padded.get()[q] = field.values[mirror(q - r, n)];
    for (int o = -r; o <= r; ++o) kern.get()[(o + lx) % lx] = kernel.weights[o + r];
  } else {
    const int w = 2 * r + 1;
    for (int qy = 0; qy < span; ++qy) {
      const int jy = mirror(qy - r, n);
      for (int qx = 0; qx < span; ++qx)
        padded.get()[static_cast<std::size_t>(qy) * lx + qx] =
            field.values[static_cast<std::size_t>(jy) * n + mirror(qx - r, n)];
    }
    for (int oy = -r; oy <= r; ++oy)
      for (int ox = -r; ox <= r; ++ox)
        kern.get()[static_cast<std::size_t>((oy + ly) % ly) * lx + (ox + lx) % lx] =
            kernel.weights[(oy + r) * w + (ox + r)];
  }

  auto fhat = alloc_complex(ncomplex);
  auto khat = alloc_complex(ncomplex);
  fftw_execute_dft_r2c(plans.forward, padded.get(), fhat.get());
  fftw_execute_dft_r2c(plans.forward, kern.get(), khat.get());
  for (std::size_t i = 0; i < ncomplex; ++i) {
    const double re = fhat.get()[i][0] * khat.get()[i][0] - fhat.get()[i][1] * khat.get()[i][1];
    const double im = fhat.get()[i][0] * khat.get()[i][1] + fhat.get()[i][1] * khat.get()[i][0];
    fhat.get()[i][0] = re;
    fhat.get()[i][1] = im;
  }
  fftw_execute_dft_c2r(plans.backward, fhat.get(), padded.get());

  ScalarField out(g);
  const double scale = 1.0 / static_cast<double>(nreal);
  if (g.dim == 1) {
    for (int i = 0; i < n; ++i) out.values[i] = padded.get()[i + r] * scale;
  } else {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        out.values[static_cast<std::size_t>(j) * n + i] =
            padded.get()[static_cast<std::size_t>(j + r) * lx + (i + r)] * scale;
  }
  return out;
}


namespace detail {

ScalarField apply_fourier_multiplier(const ScalarField& field, int pad,
                                     const std::function<double(double, double)>& multiplier) {
  const GridSpec& g = field.grid;
  const int n = g.cells;
  const int len = fft_size(n + 2 * std::max(pad, 1));
  const int lx = len;
  const int ly = g.dim > 1 ? len : 1;
  const std::size_t nreal = static_cast<std::size_t>(lx) * ly;
  const std::size_t ncomplex = static_cast<std::size_t>(lx / 2 + 1) * ly;
  const PlanPair plans = plans_for(g.dim, lx, ly);
  auto buf = alloc_real(nreal);
  std::fill_n(buf.get(), nreal, 0.0);
  if (g.dim == 1) {
    std::copy(field.values.begin(), field.values.end(), buf.get());
  } else {
    for (int j = 0; j < n; ++j)
      std::copy_n(field.values.begin() + static_cast<std::ptrdiff_t>(j) * n, n,
                  buf.get() + static_cast<std::size_t>(j) * lx);
  }
  auto spec = alloc_complex(ncomplex);
  fftw_execute_dft_r2c(plans.forward, buf.get(), spec.get());
  const double dk = 2.0 * 3.14159265358979323846 / (len * g.spacing());
  const int kxn = lx / 2 + 1;
  for (int jy = 0; jy < ly; ++jy) {
    const int fy = jy <= ly / 2 ? jy : jy - ly;
    for (int jx = 0; jx < kxn; ++jx) {
      const double m = multiplier(jx * dk, g.dim > 1 ? fy * dk : 0.0);
      const std::size_t idx = static_cast<std::size_t>(jy) * kxn + jx;
      spec.get()[idx][0] *= m;
      spec.get()[idx][1] *= m;
    }
  }
  fftw_execute_dft_c2r(plans.backward, spec.get(), buf.get());
  ScalarField out(g);
  const double scale = 1.0 / static_cast<double>(nreal);
  if (g.dim == 1) {
    for (int i = 0; i < n; ++i) out.values[i] = buf.get()[i] * scale;
  } else {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        out.values[static_cast<std::size_t>(j) * n + i] = buf.get()[static_cast<std::size_t>(j) * lx + i] * scale;
  }
  return out;
}

}  // namespace detail

ScalarField convolve(const ScalarField& field, const DiscreteKernel& kernel, ConvolutionMethod method) {
  if (method == ConvolutionMethod::automatic) {
    const std::size_t taps = kernel.weights.size();
    method = taps > 64 ? ConvolutionMethod::spectral : ConvolutionMethod::direct;
  }
  return method == ConvolutionMethod::spectral ? convolve_spectral(field, kernel)
                                               : convolve_direct(field, kernel);
}

ScalarField convolve(const ScalarField& field, const Mollifier& mol, ConvolutionMethod method) {
  return convolve(field, mollifier_kernel(mol, field.grid), method);
}

VectorField convolve_gradient(const ScalarField& field, const Mollifier& mol, Placement placement,
                              ConvolutionMethod method) {
  VectorField out(field.grid);
  for (int a = 0; a < field.grid.dim; ++a) {
    const auto k = gradient_kernel(mol, field.grid, a, placement == Placement::faces);
    out.components[a] = convolve(field, k, method).values;
  }
  return out;
}

ScalarField deposit(std::span<const Point> positions, const Mollifier& mol, const GridSpec& grid) {
  require_resolved(mol, grid);
  ScalarField out(grid);
  if (positions.empty()) return out;
  const double h = grid.spacing();
  const int n = grid.cells;
  const double eps = mol.eps();
  const double inv_n = 1.0 / static_cast<double>(positions.size());
  const double vol = grid.cell_volume();
  std::vector<double> wx, wy;
  for (const Point& p : positions) {
    if (!grid.box.contains(p, grid.dim))
      throw BoundaryEscape("deposit: particle left the simulation box");
    auto range = [&](double c) {
      const int first = std::max(0, static_cast<int>(std::floor((c - eps - grid.box.lo) / h - 0.5)));
      const int last = std::min(n - 1, static_cast<int>(std::ceil((c + eps - grid.box.lo) / h - 0.5)));
      return std::pair{first, last};
    };
    const auto [ix0, ix1] = range(p[0]);
    if (grid.dim == 1) {
      wx.assign(ix1 - ix0 + 1, 0.0);
      double total = 0.0;
      for (int i = ix0; i <= ix1; ++i) {
        wx[i - ix0] = mol.value({grid.center_coord(i) - p[0], 0.0});
        total += wx[i - ix0];
      }
      if (total <= 0.0) continue;
      const double scale = inv_n / (total * vol);
      for (int i = ix0; i <= ix1; ++i) out.values[i] += wx[i - ix0] * scale;
    } else {
      const auto [iy0, iy1] = range(p[1]);
      const int nx = ix1 - ix0 + 1;
      wx.assign(static_cast<std::size_t>(nx) * (iy1 - iy0 + 1), 0.0);
      double total = 0.0;
      for (int j = iy0; j <= iy1; ++j) {
        const double dy = grid.center_coord(j) - p[1];
        for (int i = ix0; i <= ix1; ++i) {
          const double v = mol.value({grid.center_coord(i) - p[0], dy});
          wx[static_cast<std::size_t>(j - iy0) * nx + (i - ix0)] = v;
          total += v;
        }
      }
      if (total <= 0.0) continue;
      const double scale = inv_n / (total * vol);
      for (int j = iy0; j <= iy1; ++j)
        for (int i = ix0; i <= ix1; ++i)
          out.values[static_cast<std::size_t>(j) * n + i] +=
              wx[static_cast<std::size_t>(j - iy0) * nx + (i - ix0)] * scale;
    }
  }
  return out;
}

namespace {

struct Stencil {
  int i0 = 0;
  int j0 = 0;
  double fx = 0.0;
  double fy = 0.0;
};

Stencil locate(const GridSpec& g, const Point& x) {
  if (!g.box.contains(x, g.dim)) throw DomainError("interpolate: point outside the box");
  const double h = g.spacing();
  auto axis = [&](double c, int& i0, double& f) {
    const double s = std::clamp((c - g.box.lo) / h - 0.5, 0.0, static_cast<double>(g.cells - 1));
    i0 = std::min(static_cast<int>(s), g.cells - 2);
    f = s - i0;
  };
  Stencil st;
  axis(x[0], st.i0, st.fx);
  if (g.dim > 1) axis(x[1], st.j0, st.fy);
  return st;
}

double blend(const std::vector<double>& v, const GridSpec& g, const Stencil& s) {
  if (g.dim == 1) return (1.0 - s.fx) * v[s.i0] + s.fx * v[s.i0 + 1];
  const std::size_t n = static_cast<std::size_t>(g.cells);
  const std::size_t base = static_cast<std::size_t>(s.j0) * n + s.i0;
  const double lower = (1.0 - s.fx) * v[base] + s.fx * v[base + 1];
  const double upper = (1.0 - s.fx) * v[base + n] + s.fx * v[base + n + 1];
  return (1.0 - s.fy) * lower + s.fy * upper;
}

}  // namespace

double interpolate(const ScalarField& field, const Point& x) {
  return blend(field.values, field.grid, locate(field.grid, x));
}

Point interpolate(const VectorField& field, const Point& x) {
  const Stencil s = locate(field.grid, x);
  Point out{blend(field.components[0], field.grid, s), 0.0};
  if (field.grid.dim > 1) out[1] = blend(field.components[1], field.grid, s);
  return out;
}

double lp_norm(const ScalarField& field, double p) {
  if (!(p >= 1.0)) throw DomainError("lp_norm: p must be at least 1");
  double s = 0.0;
  if (p == 1.0) {
    for (double v : field.values) s += std::abs(v);
    return s * field.grid.cell_volume();
  }
  for (double v : field.values) s += std::pow(std::abs(v), p);
  return std::pow(s * field.grid.cell_volume(), 1.0 / p);
}

double l1_distance(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid == b.grid)) throw ConfigError("l1_distance: grids differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += std::abs(a.values[i] - b.values[i]);
  return s * a.grid.cell_volume();
}

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token) {
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size())
    throw ConfigError("grid file: bad number '" + token + "'");
  return v;
}

}  // namespace

void write_grid(std::ostream& out, const ScalarField& field, double time) {
  const GridSpec& g = field.grid;
  out << "CDLGRID " << g.dim << ' ' << g.cells << ' ' << shortest(g.box.lo) << ' '
      << shortest(g.box.hi) << ' ' << shortest(time) << '\n';
  std::vector<unsigned char> bytes(field.values.size() * sizeof(double));
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    auto u = std::bit_cast<std::uint64_t>(field.values[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<unsigned char>(u >> (8 * b));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("grid file: write failed");
}

ScalarField read_grid(std::istream& in, double* time) {
  std::string header;
  if (!std::getline(in, header)) throw ConfigError("grid file: missing header");
  std::istringstream hs(header);
  std::string magic, dim, cells, lo, hi, t;
  if (!(hs >> magic >> dim >> cells >> lo >> hi >> t) || magic != "CDLGRID")
    throw ConfigError("grid file: malformed header '" + header + "'");
  GridSpec g{std::stoi(dim), std::stoi(cells), {parse_double(lo), parse_double(hi)}};
  g.validate();
  ScalarField field(g);
  std::vector<unsigned char> bytes(field.values.size() * sizeof(double));
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
    throw ConfigError("grid file: truncated payload");
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    field.values[i] = std::bit_cast<double>(u);
  }
  if (time) *time = parse_double(t);
  return field;
}

void write_grid_file(const std::string& path, const ScalarField& field, double time) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_grid(out, field, time);
}

ScalarField read_grid_file(const std::string& path, double* time) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_grid(in, time);
}

}  // namespace crossdiff
