#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "structcond/cn_engine.hpp"
#include "structcond/corpus.hpp"
#include "structcond/cv.hpp"
#include "structcond/oracle.hpp"
#include "structcond/qs.hpp"
#include "structcond/version.hpp"

namespace py = pybind11;
using namespace structcond;

namespace {

std::optional<double> tol_arg(py::object rank_tol) {
  if (rank_tol.is_none()) return std::nullopt;
  return rank_tol.cast<double>();
}

CvParams make_cv(const Vector& c, const Vector& d, Index n) {
  CvParams p;
  p.c = c;
  p.d = d;
  p.n = n;
  return p;
}

QsParams make_qs(const Vector& a, const Vector& e, const Vector& b,
                 const Vector& d, const Vector& f, const Vector& g,
                 const Vector& h) {
  QsParams p;
  p.a = a;
  p.e = e;
  p.b = b;
  p.d = d;
  p.f = f;
  p.g = g;
  p.h = h;
  return p;
}

GvTangentParams make_gv(const Vector& t, const Vector& u, const Vector& d,
                        const Vector& v, const Vector& w) {
  GvTangentParams p;
  p.t = t;
  p.u = u;
  p.d = d;
  p.v = v;
  p.w = w;
  return p;
}

py::dict report_dict(const CnReport& r) {
  py::dict out;
  out["mixed"] = r.mixed;
  out["componentwise"] = r.componentwise;
  out["rank"] = r.rank;
  out["mode"] = to_string(r.mode);
  out["kernel"] = r.kernel;
  return out;
}

py::dict estimate_dict(const OracleEstimate& e) {
  py::dict out;
  out["mixed_lb"] = e.mixed_lb;
  out["componentwise_lb"] = e.componentwise_lb;
  out["accepted"] = e.accepted;
  out["rejected"] = e.rejected;
  out["inconclusive"] = e.inconclusive;
  return out;
}

}  // namespace

PYBIND11_MODULE(_structcond, m) {
  m.doc() =
      "Mixed and componentwise condition numbers for the Moore-Penrose "
      "inverse and minimum-norm least-squares solutions of parameterized "
      "rank-structured matrices";
  m.attr("__version__") = kVersion;

  py::register_exception<NotFullColumnRankError>(m, "NotFullColumnRankError");
  py::register_exception<NodeCollisionError>(m, "NodeCollisionError");
  py::register_exception<DegenerateInputError>(m, "DegenerateInputError");

  m.def(
      "pinv",
      [](const Matrix& mat, py::object rank_tol) {
        const PinvBundle b = pinv(mat, tol_arg(rank_tol));
        py::dict out;
        out["pinv"] = b.pinv;
        out["rank"] = b.rank;
        out["proj_e"] = b.proj_e;
        out["proj_f"] = b.proj_f;
        out["tol_used"] = b.tol_used;
        out["singular_values"] = b.singular_values;
        return out;
      },
      py::arg("m"), py::arg("rank_tol") = py::none(),
      "SVD-based Moore-Penrose inverse with projectors and numerical rank");

  m.def("build_cv",
        [](const Vector& c, const Vector& d, Index n) {
          return build_cv(make_cv(c, d, n));
        },
        py::arg("c"), py::arg("d"), py::arg("n"));
  m.def("build_qs",
        [](const Vector& a, const Vector& e, const Vector& b, const Vector& d,
           const Vector& f, const Vector& g, const Vector& h) {
          return build_qs(make_qs(a, e, b, d, f, g, h));
        },
        py::arg("a"), py::arg("e"), py::arg("b"), py::arg("d"), py::arg("f"),
        py::arg("g"), py::arg("h"));
  m.def("gv_expand",
        [](const Vector& t, const Vector& u, const Vector& d, const Vector& v,
           const Vector& w) {
          const auto [qs, mat] = gv_expand(make_gv(t, u, d, v, w));
          py::dict out;
          out["matrix"] = mat;
          out["a"] = qs.a;
          out["e"] = qs.e;
          out["b"] = qs.b;
          out["d"] = qs.d;
          out["f"] = qs.f;
          out["g"] = qs.g;
          out["h"] = qs.h;
          return out;
        },
        py::arg("t"), py::arg("u"), py::arg("d"), py::arg("v"), py::arg("w"));

  m.def("cv_pinv_cn_upper",
        [](const Vector& c, const Vector& d, Index n, py::object rank_tol) {
          return report_dict(cv_pinv_cn_upper(make_cv(c, d, n),
                                              tol_arg(rank_tol)));
        },
        py::arg("c"), py::arg("d"), py::arg("n"),
        py::arg("rank_tol") = py::none());
  m.def("cv_ls_cn_upper",
        [](const Vector& c, const Vector& d, Index n, const Vector& b,
           py::object rank_tol) {
          return report_dict(
              cv_ls_cn_upper(make_cv(c, d, n), b, tol_arg(rank_tol)));
        },
        py::arg("c"), py::arg("d"), py::arg("n"), py::arg("b"),
        py::arg("rank_tol") = py::none());

  m.def("qs_pinv_cn_upper",
        [](const Vector& a, const Vector& e, const Vector& b, const Vector& d,
           const Vector& f, const Vector& g, const Vector& h,
           py::object rank_tol) {
          return report_dict(qs_pinv_cn_upper(make_qs(a, e, b, d, f, g, h),
                                              tol_arg(rank_tol)));
        },
        py::arg("a"), py::arg("e"), py::arg("b"), py::arg("d"), py::arg("f"),
        py::arg("g"), py::arg("h"), py::arg("rank_tol") = py::none());
  m.def("qs_effective_pinv_cn",
        [](const Vector& a, const Vector& e, const Vector& b, const Vector& d,
           const Vector& f, const Vector& g, const Vector& h,
           py::object rank_tol) {
          return report_dict(qs_effective_pinv_cn(
              make_qs(a, e, b, d, f, g, h), tol_arg(rank_tol)));
        },
        py::arg("a"), py::arg("e"), py::arg("b"), py::arg("d"), py::arg("f"),
        py::arg("g"), py::arg("h"), py::arg("rank_tol") = py::none());
  m.def("gv_pinv_cn_upper",
        [](const Vector& t, const Vector& u, const Vector& d, const Vector& v,
           const Vector& w, py::object rank_tol) {
          return report_dict(
              gv_pinv_cn_upper(make_gv(t, u, d, v, w), tol_arg(rank_tol)));
        },
        py::arg("t"), py::arg("u"), py::arg("d"), py::arg("v"), py::arg("w"),
        py::arg("rank_tol") = py::none());

  m.def("pinv_cn_unstructured",
        [](const Matrix& mat, py::object rank_tol) {
          return report_dict(pinv_cn_unstructured(mat, tol_arg(rank_tol)));
        },
        py::arg("m"), py::arg("rank_tol") = py::none());
  m.def("ls_cn_unstructured",
        [](const Matrix& mat, const Vector& b, py::object rank_tol) {
          return report_dict(ls_cn_unstructured(mat, b, tol_arg(rank_tol)));
        },
        py::arg("m"), py::arg("b"), py::arg("rank_tol") = py::none());

  m.def("estimate_cv_pinv_cn",
        [](const Vector& c, const Vector& d, Index n, double epsilon,
           long trials, std::uint64_t seed) {
          const CvParams p = make_cv(c, d, n);
          PerturbSpec spec;
          spec.epsilon = epsilon;
          spec.trials = trials;
          spec.seed = seed;
          spec.mode = (c.size() + d.size()) <= 20
                          ? PerturbMode::extrapolated
                          : PerturbMode::monte_carlo;
          return estimate_dict(
              estimate_pinv_cn(cv_model(p), cv_param_set(p), spec));
        },
        py::arg("c"), py::arg("d"), py::arg("n"), py::arg("epsilon") = 1e-6,
        py::arg("trials") = 1000, py::arg("seed") = 0,
        "Perturbation-sampling lower bound for the structured condition "
        "numbers of a Cauchy-Vandermonde pseudoinverse");
}
