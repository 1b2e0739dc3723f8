#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "structcond/cn_engine.hpp"
#include "structcond/linalg.hpp"
#include "structcond/param_model.hpp"

namespace structcond {

// Parameters generating an n x n {1,1}-quasiseparable matrix through
// telescoping products: lower entry (i,j) = a_i e_{i-1}...e_{j+1} b_j,
// diagonal d_i, upper entry (i,j) = f_i g_{i+1}...g_{j-1} h_j.
struct QsParams {
  Vector a;  // length n-1, entries a_2..a_n
  Vector e;  // length n-2, entries e_2..e_{n-1}
  Vector b;  // length n-1, entries b_1..b_{n-1}
  Vector d;  // length n
  Vector f;  // length n-1, entries f_1..f_{n-1}
  Vector g;  // length n-2, entries g_2..g_{n-1}
  Vector h;  // length n-1, entries h_2..h_n

  Index n() const { return d.size(); }
  // Parameter vector [a, e, b, d, f, g, h] of length 7n-8.
  Vector psi() const;
};

// Rotation-based parameters with the rotations encoded by their tangents:
// lower chain cosine-sine pairs from t, upper ones from w.
struct GvTangentParams {
  Vector t;  // length n-2, tangents for i = 2..n-1
  Vector u;  // length n-1
  Vector d;  // length n
  Vector v;  // length n-1
  Vector w;  // length n-2

  Index n() const { return d.size(); }
  // Parameter vector [t, u, d, v, w] of length 5n-6.
  Vector psi() const;
};

struct LduSplit {
  Matrix l;   // strictly lower part
  Matrix dm;  // diagonal part
  Matrix um;  // strictly upper part
};

Matrix build_qs(const QsParams& p);
LduSplit split_ldu(const Matrix& m);

// Overflow-safe cosine-sine pairs from tangents: p = 1/hypot(1,t),
// q = t/hypot(1,t).
std::pair<Vector, Vector> cs_from_tangent(const Vector& t);

// Expands the tangent representation into the induced QsParams
// (a_n = h_n = 1) and the built matrix.
std::pair<QsParams, Matrix> gv_expand(const GvTangentParams& p);

// 7n-8 descriptors in group order [a, e, b, d, f, g, h]. All groups except
// d carry the parameter-scaled form psi_k * dM/dpsi_k.
std::vector<DerivDescriptor> qs_derivatives(const QsParams& p);
// 5n-6 descriptors in group order [t, u, d, v, w].
std::vector<DerivDescriptor> gv_derivatives(const GvTangentParams& p);

MatrixModel qs_model(const QsParams& p);
ParamSet qs_param_set(const QsParams& p);
MatrixModel gv_model(const GvTangentParams& p);
ParamSet gv_param_set(const GvTangentParams& p);

// Structured condition-number bounds, assembled at matrix level.
CnReport qs_pinv_cn_upper(const QsParams& p,
                          std::optional<double> rank_tol = {});
CnReport qs_ls_cn_upper(const QsParams& p, const Vector& b,
                        std::optional<double> rank_tol = {});
CnReport gv_pinv_cn_upper(const GvTangentParams& p,
                          std::optional<double> rank_tol = {});
CnReport gv_ls_cn_upper(const GvTangentParams& p, const Vector& b,
                        std::optional<double> rank_tol = {});

// Effective bounds: the per-index sums are dropped, leaving O(1) many
// matrix products.
CnReport qs_effective_pinv_cn(const QsParams& p,
                              std::optional<double> rank_tol = {});
CnReport qs_effective_ls_cn(const QsParams& p, const Vector& b,
                            std::optional<double> rank_tol = {});

// Equivalent representation of the same matrix: b' = tau b, a' = a / tau.
QsParams rescale_qs_representation(const QsParams& p, double tau);

struct Verdict {
  bool pass = false;
  double lhs = 0.0;
  double rhs = 0.0;  // already includes any factor (n, n-1, 2)
};

struct QsCnComparison {
  Index n = 0;
  CnReport structured_qs;
  CnReport effective;
  CnReport unstructured;
  std::optional<CnReport> structured_gv;
  std::optional<CnReport> ls_structured_qs;
  std::optional<CnReport> ls_effective;
  std::optional<CnReport> ls_unstructured;
  std::optional<CnReport> ls_structured_gv;
  std::map<std::string, Verdict> verdicts;
};

// Computes all report families for one instance and evaluates the proved
// inequalities between them with numeric margins.
QsCnComparison compare_all(const QsParams& p,
                           const std::optional<Vector>& b = {},
                           std::optional<double> rank_tol = {});
QsCnComparison compare_all(const GvTangentParams& p,
                           const std::optional<Vector>& b = {},
                           std::optional<double> rank_tol = {});

}  // namespace structcond
