#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <sstream>

#include "magflow/anosov.hpp"
#include "magflow/config.hpp"
#include "magflow/errors.hpp"
#include "magflow/green.hpp"
#include "magflow/jacobi.hpp"
#include "magflow/report.hpp"
#include "magflow/riccati.hpp"
#include "magflow/runner.hpp"

namespace py = pybind11;
using namespace magflow;

namespace {

// Python callable usable from worker threads: the GIL is taken for each call
// and for the final release of the function object.
std::function<double(double)> guarded(py::function f) {
  auto holder = std::shared_ptr<py::function>(new py::function(std::move(f)), [](py::function* p) {
    py::gil_scoped_acquire gil;
    delete p;
  });
  return [holder](double t) {
    py::gil_scoped_acquire gil;
    return (*holder)(t).cast<double>();
  };
}

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_python(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::array_t<double> array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

FourierSeries2D series(const py::object& o) {
  if (py::isinstance<py::float_>(o) || py::isinstance<py::int_>(o))
    return FourierSeries2D(o.cast<double>(), {});
  return o.cast<FourierSeries2D>();
}

ClassifyOptions classify_options(const py::dict& kw) {
  nlohmann::json cfg = {{"model", {{"kind", "constant_curvature"},
                                   {"curvature", -1.0},
                                   {"euler_characteristic", -2}}}};
  for (const auto& [k, v] : kw) cfg[k.cast<std::string>()] = from_python(py::reinterpret_borrow<py::object>(v));
  return parse_config(cfg).classify;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Numerical Anosov certification of magnetic flows on surfaces";

  auto base = py::register_exception<Error>(m, "MagflowError", PyExc_RuntimeError);
  py::register_exception<IntegrationFailure>(m, "IntegrationFailure", base.ptr());
  py::register_exception<UnsupportedQuery>(m, "UnsupportedQuery", base.ptr());
  py::register_exception<ResolutionError>(m, "ResolutionError", base.ptr());
  py::register_exception<ConjugatePointError>(m, "ConjugatePointError", base.ptr());
  py::register_exception<NumericalInconsistency>(m, "NumericalInconsistency", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<InsufficientData>(m, "InsufficientData", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  py::class_<UnitTangent>(m, "UnitTangent")
      .def(py::init([](double x, double y, double theta) { return UnitTangent{x, y, theta}; }),
           py::arg("x") = 0.0, py::arg("y") = 0.0, py::arg("theta") = 0.0)
      .def_readwrite("x", &UnitTangent::x)
      .def_readwrite("y", &UnitTangent::y)
      .def_readwrite("theta", &UnitTangent::theta)
      .def("__repr__", [](const UnitTangent& v) {
        std::ostringstream os;
        os << "UnitTangent(x=" << v.x << ", y=" << v.y << ", theta=" << v.theta << ")";
        return os.str();
      });

  py::class_<FourierMode>(m, "FourierMode")
      .def(py::init([](int kx, int ky, double c, double s) { return FourierMode{kx, ky, c, s}; }),
           py::arg("kx"), py::arg("ky"), py::arg("cos") = 0.0, py::arg("sin") = 0.0)
      .def_readwrite("kx", &FourierMode::kx)
      .def_readwrite("ky", &FourierMode::ky)
      .def_readwrite("cos", &FourierMode::cos_coeff)
      .def_readwrite("sin", &FourierMode::sin_coeff);

  py::class_<FourierSeries2D>(m, "FourierSeries2D")
      .def(py::init<double, std::vector<FourierMode>>(), py::arg("mean") = 0.0,
           py::arg("modes") = std::vector<FourierMode>{})
      .def_property_readonly("mean", &FourierSeries2D::mean)
      .def_property_readonly("modes", &FourierSeries2D::modes)
      .def("value", &FourierSeries2D::value, py::arg("x"), py::arg("y"), py::arg("period_x") = 1.0,
           py::arg("period_y") = 1.0);

  py::class_<SurfaceModel>(m, "SurfaceModel")
      .def_static("constant_curvature",
                  [](double k, double b, int chi, std::optional<double> area) {
                    return area ? SurfaceModel::constant_curvature(k, b, chi, *area)
                                : SurfaceModel::constant_curvature(k, b, chi);
                  },
                  py::arg("curvature"), py::arg("magnetic"), py::arg("euler_characteristic"),
                  py::arg("area") = py::none())
      .def_static("conformal_torus",
                  [](const py::object& phi, const py::object& b, double lx, double ly) {
                    return SurfaceModel::conformal_torus(series(phi), series(b), lx, ly);
                  },
                  py::arg("phi") = 0.0, py::arg("magnetic") = 0.0, py::arg("period_x") = 1.0,
                  py::arg("period_y") = 1.0)
      .def_static("abstract_profile",
                  [](py::function kappa, double k_bound, std::optional<int> chi,
                     std::optional<double> area, std::string label) {
                    return SurfaceModel::abstract_profile(guarded(std::move(kappa)), k_bound, chi,
                                                          area, std::move(label));
                  },
                  py::arg("kappa"), py::arg("k_bound"), py::arg("euler_characteristic") = py::none(),
                  py::arg("area") = py::none(), py::arg("label") = "abstract")
      .def_static("from_config", [](const py::object& section) { return build_model(from_python(section)); })
      .def_property_readonly("kind", [](const SurfaceModel& s) { return to_string(s.kind()); })
      .def_property_readonly("euler_characteristic", &SurfaceModel::euler_characteristic)
      .def_property_readonly("area", &SurfaceModel::area)
      .def("with_magnetic_scale", &SurfaceModel::with_magnetic_scale, py::arg("scale"));

  m.def("gaussian_curvature",
        [](const SurfaceModel& s, double x, double y) { return gaussian_curvature(s, {x, y}); },
        py::arg("model"), py::arg("x"), py::arg("y"));
  m.def("magnetic_curvature", &magnetic_curvature, py::arg("model"), py::arg("v"));
  m.def("gauss_bonnet_residual", [](const SurfaceModel& s) { return gauss_bonnet_residual(s); },
        py::arg("model"));
  m.def("integral_inequality_check",
        [](const SurfaceModel& s) {
          const auto r = integral_inequality_check(s);
          py::dict d;
          d["lhs"] = r.lhs;
          d["rhs"] = r.rhs;
          d["passes"] = r.passes;
          d["lambda_squared_threshold"] = r.lambda_squared_threshold;
          return d;
        },
        py::arg("model"));
  m.def("rotate_i", &rotate_i, py::arg("v"));

  m.def("integrate_orbit",
        [](const SurfaceModel& s, const UnitTangent& v0, double horizon, double tol, double spacing,
           bool two_sided) {
          OrbitTrace tr;
          {
            py::gil_scoped_release release;
            tr = two_sided ? integrate_orbit_two_sided(s, v0, horizon, tol, spacing)
                           : integrate_orbit(s, v0, horizon, tol, spacing);
          }
          std::vector<double> x, y, theta;
          for (const auto& st : tr.states) {
            x.push_back(st.x);
            y.push_back(st.y);
            theta.push_back(st.theta);
          }
          py::dict d;
          d["t"] = array(tr.t_samples);
          d["x"] = array(x);
          d["y"] = array(y);
          d["theta"] = array(theta);
          d["kappa"] = array(tr.kappa_samples);
          return d;
        },
        py::arg("model"), py::arg("v0"), py::arg("horizon"), py::arg("tol") = 1e-10,
        py::arg("spacing") = 0.01, py::arg("two_sided") = false);

  py::class_<CurvatureProfile>(m, "CurvatureProfile")
      .def_static("constant", &CurvatureProfile::constant, py::arg("kappa"),
                  py::arg("provenance") = "constant")
      .def_static("from_function",
                  [](py::function f, double k_bound, std::string provenance, double t_min, double t_max) {
                    return CurvatureProfile::from_function(guarded(std::move(f)), k_bound,
                                                           std::move(provenance), t_min, t_max);
                  },
                  py::arg("kappa"), py::arg("k_bound"), py::arg("provenance") = "abstract",
                  py::arg("t_min") = -std::numeric_limits<double>::infinity(),
                  py::arg("t_max") = std::numeric_limits<double>::infinity())
      .def_static("from_samples", &CurvatureProfile::from_samples, py::arg("t0"), py::arg("h"),
                  py::arg("samples"), py::arg("provenance") = "samples")
      .def_static("along_orbit",
                  [](const SurfaceModel& s, const UnitTangent& v0, double horizon) {
                    py::gil_scoped_release release;
                    return curvature_profile(s, integrate_orbit_two_sided(s, v0, horizon));
                  },
                  py::arg("model"), py::arg("v0"), py::arg("horizon") = 120.0)
      .def("__call__", &CurvatureProfile::operator(), py::arg("t"))
      .def_property_readonly("t_min", &CurvatureProfile::t_min)
      .def_property_readonly("t_max", &CurvatureProfile::t_max)
      .def_property_readonly("k_bound", &CurvatureProfile::k_bound)
      .def_property_readonly("provenance", &CurvatureProfile::provenance)
      .def("flipped", &CurvatureProfile::flipped)
      .def("shifted", &CurvatureProfile::shifted, py::arg("offset"));

  py::class_<PerpJacobiState>(m, "PerpJacobiState")
      .def(py::init([](double v, double d) { return PerpJacobiState{v, d}; }), py::arg("value"),
           py::arg("deriv"))
      .def_readwrite("value", &PerpJacobiState::value)
      .def_readwrite("deriv", &PerpJacobiState::deriv)
      .def("__iter__", [](const PerpJacobiState& s) {
        return py::iter(py::make_tuple(s.value, s.deriv));
      });

  m.def("integrate_perp",
        [](const CurvatureProfile& p, const PerpJacobiState& s0, double t0, double t1, double tol) {
          py::gil_scoped_release release;
          return integrate_perp(p, s0, t0, t1, tol)(t1);
        },
        py::arg("profile"), py::arg("s0"), py::arg("t0"), py::arg("t1"), py::arg("tol") = kJacobiTol);
  m.def("solve_Jz", &solve_Jz, py::arg("profile"), py::arg("t"), py::arg("tol") = kJacobiTol,
        py::call_guard<py::gil_scoped_release>());
  m.def("solve_Jr", &solve_Jr, py::arg("profile"), py::arg("r"), py::arg("t"),
        py::arg("tol") = kJacobiTol, py::call_guard<py::gil_scoped_release>());
  m.def("psi_slope", &psi_slope, py::arg("profile"), py::arg("r"), py::arg("tol") = kJacobiTol,
        py::call_guard<py::gil_scoped_release>());
  m.def("wronskian", &wronskian, py::arg("a"), py::arg("b"));
  m.def("sasaki_norm", [](double j, double dj) { return sasaki_norm(QuotientVector{j, dj}); },
        py::arg("j"), py::arg("dj"));
  m.def("first_conjugate_time", &first_conjugate_time, py::arg("profile"), py::arg("horizon"),
        py::arg("scan_step") = 0.01, py::arg("tol") = 1e-9, py::call_guard<py::gil_scoped_release>());

  m.def("integrate_riccati",
        [](const CurvatureProfile& p, double u0, double t0, double t1, double spacing) {
          RiccatiOptions o;
          o.sample_spacing = spacing;
          RiccatiTrace tr;
          {
            py::gil_scoped_release release;
            tr = integrate_riccati(p, u0, t0, t1, o);
          }
          py::dict d;
          d["t"] = array(tr.t_samples);
          d["u"] = array(tr.u_samples);
          d["blowup_time"] = tr.blowup_time;
          return d;
        },
        py::arg("profile"), py::arg("u0"), py::arg("t0"), py::arg("t1"), py::arg("spacing") = 0.0);
  m.def("comparison_envelope",
        [](double k, double t) {
          const auto e = comparison_envelope(k, t);
          return py::make_tuple(e.lower, e.upper);
        },
        py::arg("k"), py::arg("t"));

  py::enum_<Side>(m, "Side").value("Stable", Side::Stable).value("Unstable", Side::Unstable);

  m.def("green_slopes",
        [](const CurvatureProfile& p, double tol) {
          GreenOptions o;
          o.tol = tol;
          GreenEstimate g;
          {
            py::gil_scoped_release release;
            g = green_estimate(p, o);
          }
          py::dict d;
          d["u_plus0"] = g.u_plus0;
          d["u_minus0"] = g.u_minus0;
          d["gap"] = g.gap;
          d["converged"] = g.converged;
          d["r_schedule"] = g.plus.r_schedule;
          d["residuals_plus"] = g.plus.residuals;
          d["residuals_minus"] = g.minus.residuals;
          return d;
        },
        py::arg("profile"), py::arg("tol") = 1e-9);
  m.def("invariance_residual", &invariance_residual, py::arg("profile"), py::arg("t"),
        py::arg("precise_tol") = kPreciseTol, py::arg("side") = Side::Stable,
        py::call_guard<py::gil_scoped_release>());

  m.def("contraction_fit",
        [](const CurvatureProfile& p, double window) {
          ContractionFit f;
          {
            py::gil_scoped_release release;
            f = contraction_fit(p, window);
          }
          py::dict d;
          d["c"] = f.c;
          d["d"] = f.d;
          d["fit_residual"] = f.fit_residual;
          d["failed"] = f.failed;
          d["failure"] = f.failure;
          return d;
        },
        py::arg("profile"), py::arg("window") = 20.0);

  m.def("analyze_profile",
        [](const CurvatureProfile& p, py::kwargs kw) {
          const ClassifyOptions o = classify_options(kw);
          OrbitResult r;
          {
            py::gil_scoped_release release;
            r = analyze_profile(p, o);
          }
          return to_python(orbit_to_json(r));
        },
        py::arg("profile"));
  m.def("classify",
        [](const SurfaceModel& s, py::kwargs kw) {
          const ClassifyOptions o = classify_options(kw);
          AnosovReport r;
          {
            py::gil_scoped_release release;
            r = classify(s, o);
          }
          return to_python(report_to_json(r, nlohmann::json::object(), std::nullopt));
        },
        py::arg("model"),
        "Classify a model.  Keyword arguments are config sections (ensemble, tolerances, "
        "analyses, workers).");
  m.def("run",
        [](const py::object& config, std::optional<std::filesystem::path> out) {
          RunConfig cfg = parse_config(from_python(config));
          if (out) cfg.output_directory = *out;
          std::ostringstream log;
          py::gil_scoped_release release;
          return cfg.sweep ? sweep(cfg, log) : run(cfg, log);
        },
        py::arg("config"), py::arg("out") = py::none(),
        "Run a configuration dict like the command line tool; returns the exit status.");

  m.attr("__version__") = kToolVersion;
}
