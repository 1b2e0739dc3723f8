#pragma once

#include <optional>
#include <vector>

#include "structcond/cn_engine.hpp"
#include "structcond/linalg.hpp"
#include "structcond/param_model.hpp"

namespace structcond {

// Parameters of an m x n Cauchy-Vandermonde matrix: l Cauchy columns
// 1/(c_i - d_j) followed by n - l Vandermonde columns c_i^k.
struct CvParams {
  Vector c;  // length m
  Vector d;  // length l, 0 <= l <= n
  Index n = 0;

  Index m() const { return c.size(); }
  Index l() const { return d.size(); }
  // Parameter vector [c; d].
  Vector psi() const;
};

struct CvValidation {
  struct Pair {
    Index i, j;
    double gap;  // |c_i - d_j| / max(|c_i|, |d_j|, 1)
  };
  std::vector<Pair> collisions;       // exact c_i == d_j
  std::vector<Pair> near_collisions;  // relative gap below 1e-12
  bool zero_node_with_powers = false; // c_i == 0 while n - l - 1 >= 1
};

CvValidation check_cv(const CvParams& p);

// Throws NodeCollisionError on exact collisions.
Matrix build_cv(const CvParams& p);

// Auxiliary matrices entering the derivative formulas.
struct CvAux {
  Matrix m1;     // [-M(:,1:l) | 0 | M(:,l+2:n)]
  Matrix m2;     // [M(:,1:l) | 0]
  Matrix q;      // row i = c'_i
  Vector d_ext;  // [d_1..d_l, 0..0] of length n
};

CvAux cv_aux(const CvParams& p);

// m + l rank-one descriptors in order [c_1..c_m, d_1..d_l].
std::vector<DerivDescriptor> cv_derivatives(const CvParams& p);

// Generic-engine view of the same matrix family.
MatrixModel cv_model(const CvParams& p);
ParamSet cv_param_set(const CvParams& p);

// Closed-form structured condition numbers.
CnReport cv_pinv_cn_upper(const CvParams& p,
                          std::optional<double> rank_tol = {});
CnReport cv_pinv_cn_exact_fullrank(const CvParams& p,
                                   std::optional<double> rank_tol = {});
CnReport cv_ls_cn_upper(const CvParams& p, const Vector& b,
                        std::optional<double> rank_tol = {});
CnReport cv_ls_cn_exact_fullrank(const CvParams& p, const Vector& b,
                                 std::optional<double> rank_tol = {});

}  // namespace structcond
