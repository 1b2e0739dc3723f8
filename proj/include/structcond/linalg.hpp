#pragma once

#include <Eigen/Core>

#include <optional>
#include <utility>

#include "structcond/errors.hpp"

namespace structcond {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Throws InvalidArgumentError if any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what = "matrix");
void require_finite(const Vector& v, const char* what = "vector");

// Entrywise product. Shapes must match.
Matrix hadamard(const Matrix& a, const Matrix& b);

// Entrywise division with the pass-through convention: a zero divisor acts
// as 1, so numerator entries over zero denominators pass through unchanged.
Matrix pseudo_divide(const Matrix& a, const Matrix& b);
Vector pseudo_divide(const Vector& a, const Vector& b);

// Largest absolute entry.
double max_norm(const Matrix& m);
double max_norm(const Vector& v);
// Largest absolute row sum; for vectors the largest absolute entry.
double inf_norm(const Matrix& m);
double inf_norm(const Vector& v);

// Both norms at once.
std::pair<double, double> norms(const Matrix& m);

// Matrix products with extended-precision accumulators and a fixed
// inner-summation order. Every product that feeds a condition-number kernel
// goes through these, so independently assembled routes agree to a few ulps
// even under cancellation.
Matrix ld_prod(const Matrix& a, const Matrix& b);
Vector ld_prod(const Matrix& a, const Vector& v);
double ld_dot(const Vector& a, const Vector& b);
// Row-scaled product: result(s,t) = sum_i a(s,i) * w(i) * b(i,t).
Matrix ld_scaled_prod(const Matrix& a, const Vector& w, const Matrix& b);
Vector ld_scaled_prod(const Matrix& a, const Vector& w, const Vector& v);

// Accumulates nonnegative kernel terms in extended precision so that the
// result is independent of term order at double precision.
class KernelAccum {
 public:
  KernelAccum(Index rows, Index cols);
  // acc += |t| * weight (t is expected entrywise nonnegative already;
  // weight must be nonnegative).
  void add(const Matrix& t, double weight = 1.0);
  void add_outer(const Vector& u, const Vector& v, double weight = 1.0);
  Matrix value() const;

 private:
  Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> acc_;
};

struct PinvBundle {
  Matrix m;          // original matrix, m x n
  Matrix pinv;       // Moore-Penrose inverse, n x m
  Index rank = 0;    // numerical rank
  Matrix proj_e;     // I_m - M M†
  Matrix proj_f;     // I_n - M† M
  double tol_used = 0.0;
  Vector singular_values;  // all min(m,n), descending
};

// SVD-based pseudoinverse. Singular values at or below the tolerance are
// truncated. Default tolerance: max(rows, cols) * eps * sigma_max.
PinvBundle pinv(const Matrix& m, std::optional<double> rank_tol = {});

// Numerical rank of a matrix under the same cutoff rule (or a caller tol).
Index numerical_rank(const Matrix& m, std::optional<double> rank_tol = {});

// Largest singular value.
double spectral_norm(const Matrix& m);

// Max-norm residuals of the four Penrose equations, in the order
// (M M† M - M), (M† M M† - M†), ((M M†)^T - M M†), ((M† M)^T - M† M).
struct PenroseResiduals {
  double eq1, eq2, eq3, eq4;
};
PenroseResiduals penrose_residuals(const PinvBundle& b);

}  // namespace structcond
