#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "frobenius/error.hpp"
#include "frobenius/scenario.hpp"
#include "frobenius/superint.hpp"

namespace py = pybind11;
using namespace frob;

namespace {

py::array_t<double> to_numpy(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.rank(), t.dim());
  py::array_t<double> a(shape);
  std::copy(t.data().begin(), t.data().end(), a.mutable_data());
  return a;
}

Tensor product_from(py::array_t<double, py::array::c_style | py::array::forcecast> a) {
  if (a.ndim() != 3 || a.shape(0) != a.shape(1) || a.shape(1) != a.shape(2))
    throw InputError("expected an (n, n, n) array");
  Tensor t = Tensor::product(static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), t.data().begin());
  return t;
}

ProductAtPoint product_at(const Chart& c, py::array_t<double> star, const Point& x) {
  ProductAtPoint p = ProductAtPoint::zero(metric_at(c, x));
  Tensor t = product_from(star);
  if (t.dim() != c.n()) throw DimensionError("product dimension does not match chart");
  p.star = t;
  return p;
}

Point origin_or(const Chart& c, const std::optional<Point>& x) { return x ? *x : Point::Zero(c.n()); }

py::dict residual_summary(const ResidualField& r) {
  py::dict d;
  d["max"] = r.max();
  d["valid"] = std::count(r.valid.begin(), r.valid.end(), 1);
  return d;
}

}  // namespace

PYBIND11_MODULE(_frobenius, m) {
  m.doc() = "Curved Frobenius, Hesse-Frobenius and skew-Hessian structures on constant-curvature charts";
  m.attr("__version__") = version_string;

  py::register_exception<Error>(m, "FrobeniusError", PyExc_RuntimeError);

  py::class_<Chart>(m, "Chart")
      .def(py::init<int, double, double>(), py::arg("n"), py::arg("kappa"), py::arg("domain_radius"))
      .def_property_readonly("n", &Chart::n)
      .def_property_readonly("kappa", &Chart::kappa)
      .def_property_readonly("domain_radius", &Chart::domain_radius)
      .def_property_readonly("flat", &Chart::flat)
      .def("contains", &Chart::contains);

  m.def("metric_at", [](const Chart& c, const Point& x) {
    MetricAtPoint mt = metric_at(c, x);
    return py::make_tuple(mt.g, mt.g_inv);
  });
  m.def("christoffel_at", [](const Chart& c, const Point& x) { return to_numpy(christoffel_at(c, x)); },
        "gamma[k, i, j] = Γ^k_ij");
  m.def("riemann_at", [](const Chart& c, const Point& x) { return to_numpy(riemann_at(c, x).op); },
        "op[a, b, i, j] = (R(e_i, e_j) e_b)^a");

  m.def(
      "solve_seed_algebra",
      [](const Chart& c, std::uint64_t rng_seed, std::optional<Point> x, int candidates) {
        SeedSolverOptions o;
        o.candidates = candidates;
        Point p = origin_or(c, x);
        return to_numpy(solve_seed_algebra(c.n(), metric_at(c, p), c.kappa(), rng_seed, o).star);
      },
      py::arg("chart"), py::arg("rng_seed"), py::arg("point") = py::none(), py::arg("candidates") = 8,
      "Seed product star[i, j, k] = (e_i * e_j)^k at `point` (default: origin).");
  m.def(
      "validate_seed",
      [](const Chart& c, py::array_t<double> star, std::optional<Point> x) {
        SeedValidation v = validate_seed(product_at(c, star, origin_or(c, x)), c.kappa());
        py::dict d;
        d["passed"] = v.passed;
        d["commutativity"] = v.commutativity;
        d["compatibility"] = v.compatibility;
        d["associator"] = v.associator;
        return d;
      },
      py::arg("chart"), py::arg("star"), py::arg("point") = py::none());
  m.def(
      "spectral_bound",
      [](const Chart& c, py::array_t<double> star, std::optional<Point> x) {
        return spectral_bound(product_at(c, star, origin_or(c, x)));
      },
      py::arg("chart"), py::arg("star"), py::arg("point") = py::none());
  m.def(
      "classify_point",
      [](const Chart& c, py::array_t<double> star, std::optional<Point> x) {
        Point p = origin_or(c, x);
        ProductAtPoint prod = product_at(c, star, p);
        Signature sig = estimate_mu(prod, riemann_at(c, p));
        return to_string(classify(sig, c.flat(), max_associator(prod)));
      },
      py::arg("chart"), py::arg("star"), py::arg("point") = py::none());

  py::class_<ProductField>(m, "ProductField")
      .def_property_readonly("chart", [](const ProductField& f) { return f.chart; })
      .def_property_readonly("shape", [](const ProductField& f) { return f.grid.counts(); })
      .def_property_readonly("spacing", [](const ProductField& f) { return f.grid.max_spacing(); })
      .def_property_readonly("star",
                             [](const ProductField& f) {
                               int n = f.chart.n();
                               py::array_t<double> a({static_cast<py::ssize_t>(f.star.size()), py::ssize_t(n),
                                                      py::ssize_t(n), py::ssize_t(n)});
                               double* out = a.mutable_data();
                               for (const Tensor& t : f.star) out = std::copy(t.data().begin(), t.data().end(), out);
                               return a;
                             })
      .def_property_readonly("points", [](const ProductField& f) {
        Mat pts(static_cast<Eigen::Index>(f.grid.size()), f.grid.dim());
        for (std::size_t v = 0; v < f.grid.size(); ++v) pts.row(static_cast<Eigen::Index>(v)) = f.grid.point(v).transpose();
        return pts;
      });

  m.def(
      "construct_field",
      [](const Chart& c, py::array_t<double> star, int nodes, double half_width) {
        Grid g = Grid::cube(c.n(), nodes, half_width);
        ProductAtPoint seed = product_at(c, star, g.point(g.center_node()));
        py::gil_scoped_release release;
        return construct_field(c, seed, g);
      },
      py::arg("chart"), py::arg("star"), py::arg("nodes"), py::arg("half_width"),
      "Integrates the prolongation system over [-half_width, half_width]^n from the seed at the centre.");
  m.def("radial_skew_field", [](const Chart& c, int nodes, double half_width, const Point& center) {
    return radial_skew_field(c, Grid::cube(c.n(), nodes, half_width), center);
  });
  m.def("verify_hmf_field", [](const ProductField& f) {
    HmfReport r = verify_hmf_field(f);
    py::dict d;
    d["hmf"] = residual_summary(r.hmf);
    d["curvature"] = residual_summary(r.curvature);
    d["symmetry"] = residual_summary(r.symmetry);
    d["commutativity"] = residual_summary(r.commutativity);
    d["compatibility"] = residual_summary(r.compatibility);
    return d;
  });
  m.def("classify_field", [](const ProductField& f) { return to_string(classify_field(f)); });
  m.def("bridge_report", [](const ProductField& f) {
    BridgeReport b = bridge_report(f);
    py::list checks;
    for (const CheckEntry& e : b.checks) {
      py::dict d;
      d["name"] = e.name;
      d["residual"] = e.residual;
      d["tolerance"] = e.tolerance;
      d["passed"] = e.passed;
      d["diagnostic"] = e.diagnostic;
      d["note"] = e.note;
      checks.append(d);
    }
    py::dict out;
    out["checks"] = checks;
    out["label"] = b.label;
    out["passed"] = b.passed();
    out["sis_diff_discrepancy"] = b.sis_diff_discrepancy;
    out["fitted_ds_coefficient"] = b.fitted_ds_coefficient;
    return out;
  });

  m.def(
      "run_scenario",
      [](const std::string& text, const std::string& dir) {
        Scenario s = parse_scenario(nlohmann::json::parse(text), dir);
        RunResult r = run(s);
        return py::make_tuple(dump_report(r.report), r.exit_code);
      },
      py::arg("scenario_json"), py::arg("base_dir") = ".",
      "Runs a scenario document; returns (report JSON text, exit code).");
  m.def("diff_reports", [](const std::string& a, const std::string& b) {
    return diff_reports(nlohmann::json::parse(a), nlohmann::json::parse(b)).dump(2);
  });
  py::register_exception<ScenarioError>(m, "ScenarioError", PyExc_ValueError);
}
