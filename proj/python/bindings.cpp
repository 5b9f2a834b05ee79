#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "crossdiff/analysis.hpp"
#include "crossdiff/error.hpp"
#include "crossdiff/field.hpp"
#include "crossdiff/harness.hpp"
#include "crossdiff/kernel.hpp"
#include "crossdiff/pde.hpp"

namespace py = pybind11;
using namespace crossdiff;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

ScalarField to_field(const GridSpec& grid, const Array& values) {
  if (static_cast<std::size_t>(values.size()) != grid.size())
    throw py::value_error("array size does not match the grid");
  ScalarField f(grid);
  std::copy(values.data(), values.data() + values.size(), f.values.begin());
  return f;
}

Array to_array(const ScalarField& f) {
  Array out(static_cast<py::ssize_t>(f.values.size()));
  std::copy(f.values.begin(), f.values.end(), out.mutable_data());
  if (f.grid.dim == 2) out.resize({f.grid.cells, f.grid.cells});
  return out;
}

std::vector<Point> to_points(const Array& xs, int dim) {
  const auto buf = xs.request();
  std::vector<Point> out;
  if (buf.ndim == 1 && dim == 1) {
    for (py::ssize_t i = 0; i < buf.shape[0]; ++i) out.push_back({xs.data()[i], 0.0});
    return out;
  }
  if (buf.ndim != 2 || buf.shape[1] != dim) throw py::value_error("positions must have shape (N, dim)");
  for (py::ssize_t i = 0; i < buf.shape[0]; ++i) {
    Point p{xs.data()[i * dim], 0.0};
    if (dim > 1) p[1] = xs.data()[i * dim + 1];
    out.push_back(p);
  }
  return out;
}

DiscreteMeasure to_measure(const Array& points, const Array& weights, int dim) {
  DiscreteMeasure m{dim, to_points(points, dim), {}};
  m.weights.assign(weights.data(), weights.data() + weights.size());
  return m;
}

}  // namespace

PYBIND11_MODULE(_crossdiff, m) {
  m.doc() = "Core numerics of the crossdiff simulation laboratory";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init<>())
      .def_readwrite("n_species", &ModelParams::n_species)
      .def_readwrite("dim", &ModelParams::dim)
      .def_readwrite("m_exponent", &ModelParams::m_exponent)
      .def_readwrite("a", &ModelParams::a)
      .def_readwrite("b", &ModelParams::b)
      .def_readwrite("sigma", &ModelParams::sigma)
      .def_readwrite("eps", &ModelParams::eps)
      .def_readwrite("horizon", &ModelParams::horizon)
      .def("validate", &ModelParams::validate);

  py::class_<GridSpec>(m, "GridSpec")
      .def(py::init([](int dim, int cells, double lo, double hi) {
             GridSpec g{dim, cells, {lo, hi}};
             g.validate();
             return g;
           }),
           py::arg("dim") = 1, py::arg("cells") = 256, py::arg("box_min") = -2.0, py::arg("box_max") = 3.0)
      .def_readonly("dim", &GridSpec::dim)
      .def_readonly("cells", &GridSpec::cells)
      .def_property_readonly("spacing", &GridSpec::spacing)
      .def_property_readonly("centers", [](const GridSpec& g) {
        Array out(g.cells);
        for (int i = 0; i < g.cells; ++i) out.mutable_data()[i] = g.center_coord(i);
        return out;
      });

  py::class_<Mollifier>(m, "Mollifier")
      .def(py::init<int, double>(), py::arg("dim"), py::arg("eps"))
      .def_property_readonly("eps", &Mollifier::eps)
      .def("value", [](const Mollifier& mol, double x, double y) { return mol.value({x, y}); },
           py::arg("x"), py::arg("y") = 0.0)
      .def("gradient", [](const Mollifier& mol, double x, double y) { return mol.gradient({x, y}); },
           py::arg("x"), py::arg("y") = 0.0)
      .def("peak", &Mollifier::peak);

  m.def("bump_normalisation", &bump_normalisation, py::arg("dim"));

  m.def("deposit", [](const Array& positions, const Mollifier& mol, const GridSpec& grid) {
    const auto pts = to_points(positions, grid.dim);
    return to_array(deposit(pts, mol, grid));
  }, py::arg("positions"), py::arg("mol"), py::arg("grid"));

  m.def("convolve", [](const Array& values, const Mollifier& mol, const GridSpec& grid, const std::string& method) {
    ConvolutionMethod how = ConvolutionMethod::automatic;
    if (method == "spectral") how = ConvolutionMethod::spectral;
    else if (method == "direct") how = ConvolutionMethod::direct;
    else if (method != "automatic") throw py::value_error("method must be automatic, spectral or direct");
    return to_array(convolve(to_field(grid, values), mol, how));
  }, py::arg("values"), py::arg("mol"), py::arg("grid"), py::arg("method") = "automatic");

  m.def("heat_exact", [](const Array& values, const GridSpec& grid, double sigma, double t) {
    return to_array(heat_exact(to_field(grid, values), sigma, t));
  }, py::arg("values"), py::arg("grid"), py::arg("sigma"), py::arg("t"));

  m.def("w2_empirical_1d", [](const std::vector<double>& a, const std::vector<double>& b) {
    return w2_empirical_1d(a, b);
  });

  m.def("bl_distance", [](const Array& xa, const Array& wa, const Array& xb, const Array& wb, int dim) {
    return bl_distance(to_measure(xa, wa, dim), to_measure(xb, wb, dim));
  }, py::arg("points_a"), py::arg("weights_a"), py::arg("points_b"), py::arg("weights_b"), py::arg("dim") = 1);

  m.def("coupling_constant", &coupling_constant, py::arg("eps"), py::arg("t"), py::arg("dim"), py::arg("m"));
  m.def("eps_schedule", &eps_schedule, py::arg("n"), py::arg("t"), py::arg("dim"), py::arg("m"));

  m.def("fit_rate", [](const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw py::value_error("x and y differ in length");
    MetricSeries s{"fit", {}};
    for (std::size_t i = 0; i < x.size(); ++i) s.add(x[i], y[i]);
    const RateFit f = fit_rate(s);
    return py::dict(py::arg("slope") = f.slope, py::arg("intercept") = f.intercept,
                    py::arg("r_squared") = f.r_squared);
  });

  m.def("spearman", [](const std::vector<double>& x, const std::vector<double>& y) {
    const Spearman s = spearman(x, y);
    return py::make_tuple(s.rho, s.p_value);
  });

  py::class_<ExperimentSpec>(m, "ExperimentSpec")
      .def_property_readonly("kind", [](const ExperimentSpec& s) { return to_string(s.kind); })
      .def_readwrite("seed", &ExperimentSpec::seed)
      .def_readwrite("replicas", &ExperimentSpec::replicas)
      .def_readwrite("n_values", &ExperimentSpec::n_values)
      .def_readwrite("eps_values", &ExperimentSpec::eps_values)
      .def_readwrite("model", &ExperimentSpec::model)
      .def(py::self == py::self);

  m.def("parse_config", &parse_config, py::arg("text"));
  m.def("serialize", &serialize, py::arg("spec"));

  py::class_<RunReport>(m, "RunReport")
      .def_property_readonly("passed", &RunReport::passed)
      .def_readonly("error", &RunReport::error)
      .def_property_readonly("series", [](const RunReport& r) {
        py::dict out;
        for (const auto& s : r.series) {
          py::list rows;
          for (const auto& p : s.points)
            rows.append(py::make_tuple(p.abscissa, p.value, p.stderr_value ? py::cast(*p.stderr_value) : py::none()));
          out[py::str(s.label)] = rows;
        }
        return out;
      })
      .def_property_readonly("checks", [](const RunReport& r) {
        py::list out;
        for (const auto& c : r.checks)
          out.append(py::dict(py::arg("criterion") = c.criterion, py::arg("name") = c.name,
                              py::arg("value") = c.value, py::arg("lower") = c.lower,
                              py::arg("upper") = c.upper, py::arg("passed") = c.passed));
        return out;
      })
      .def_property_readonly("report_csv", [](const RunReport& r) { return report_csv(r); });

  m.def("run_experiment", [](const ExperimentSpec& spec, int threads) {
    py::gil_scoped_release release;
    return run_experiment(spec, {threads});
  }, py::arg("spec"), py::arg("threads") = 1);
  m.def("write_report", &write_report, py::arg("report"), py::arg("dir"));
  m.def("version", &version);
}
