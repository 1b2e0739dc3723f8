#include "structcond/linalg.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace structcond {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgumentError(std::string(op) + ": shape mismatch (" +
                               std::to_string(a.rows()) + "x" +
                               std::to_string(a.cols()) + " vs " +
                               std::to_string(b.rows()) + "x" +
                               std::to_string(b.cols()) + ")");
  }
}

}  // namespace

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw InvalidArgumentError(std::string(what) + " has non-finite entries");
  }
}

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) {
    throw InvalidArgumentError(std::string(what) + " has non-finite entries");
  }
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  return a.cwiseProduct(b);
}

Matrix pseudo_divide(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "pseudo_divide");
  Matrix out(a.rows(), a.cols());
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      const double d = b(i, j);
      out(i, j) = (d != 0.0) ? a(i, j) / d : a(i, j);
    }
  }
  return out;
}

Vector pseudo_divide(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw InvalidArgumentError("pseudo_divide: length mismatch");
  }
  Vector out(a.size());
  for (Index i = 0; i < a.size(); ++i) {
    const double d = b(i);
    out(i) = (d != 0.0) ? a(i) / d : a(i);
  }
  return out;
}

double max_norm(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

double max_norm(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

double inf_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

double inf_norm(const Vector& v) { return max_norm(v); }

std::pair<double, double> norms(const Matrix& m) {
  return {max_norm(m), inf_norm(m)};
}

Matrix ld_prod(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw InvalidArgumentError("ld_prod: inner dimensions disagree");
  }
  Matrix c(a.rows(), b.cols());
  for (Index t = 0; t < b.cols(); ++t) {
    for (Index s = 0; s < a.rows(); ++s) {
      long double acc = 0.0L;
      for (Index k = 0; k < a.cols(); ++k) {
        acc += static_cast<long double>(a(s, k)) * b(k, t);
      }
      c(s, t) = static_cast<double>(acc);
    }
  }
  return c;
}

Vector ld_prod(const Matrix& a, const Vector& v) {
  if (a.cols() != v.size()) {
    throw InvalidArgumentError("ld_prod: inner dimensions disagree");
  }
  Vector c(a.rows());
  for (Index s = 0; s < a.rows(); ++s) {
    long double acc = 0.0L;
    for (Index k = 0; k < a.cols(); ++k) {
      acc += static_cast<long double>(a(s, k)) * v(k);
    }
    c(s) = static_cast<double>(acc);
  }
  return c;
}

double ld_dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw InvalidArgumentError("ld_dot: length mismatch");
  }
  long double acc = 0.0L;
  for (Index k = 0; k < a.size(); ++k) {
    acc += static_cast<long double>(a(k)) * b(k);
  }
  return static_cast<double>(acc);
}

Matrix ld_scaled_prod(const Matrix& a, const Vector& w, const Matrix& b) {
  if (a.cols() != w.size() || w.size() != b.rows()) {
    throw InvalidArgumentError("ld_scaled_prod: dimensions disagree");
  }
  Matrix c(a.rows(), b.cols());
  for (Index t = 0; t < b.cols(); ++t) {
    for (Index s = 0; s < a.rows(); ++s) {
      long double acc = 0.0L;
      for (Index k = 0; k < a.cols(); ++k) {
        acc += static_cast<long double>(a(s, k)) * (w(k) * b(k, t));
      }
      c(s, t) = static_cast<double>(acc);
    }
  }
  return c;
}

Vector ld_scaled_prod(const Matrix& a, const Vector& w, const Vector& v) {
  if (a.cols() != w.size() || w.size() != v.size()) {
    throw InvalidArgumentError("ld_scaled_prod: dimensions disagree");
  }
  Vector c(a.rows());
  for (Index s = 0; s < a.rows(); ++s) {
    long double acc = 0.0L;
    for (Index k = 0; k < a.cols(); ++k) {
      acc += static_cast<long double>(a(s, k)) * (w(k) * v(k));
    }
    c(s) = static_cast<double>(acc);
  }
  return c;
}

KernelAccum::KernelAccum(Index rows, Index cols) {
  acc_.setZero(rows, cols);
}

void KernelAccum::add(const Matrix& t, double weight) {
  if (t.rows() != acc_.rows() || t.cols() != acc_.cols()) {
    throw InvalidArgumentError("KernelAccum::add: shape mismatch");
  }
  if (weight == 0.0) return;
  for (Index j = 0; j < t.cols(); ++j) {
    for (Index i = 0; i < t.rows(); ++i) {
      acc_(i, j) += static_cast<long double>(t(i, j)) * weight;
    }
  }
}

void KernelAccum::add_outer(const Vector& u, const Vector& v, double weight) {
  if (u.size() != acc_.rows() || v.size() != acc_.cols()) {
    throw InvalidArgumentError("KernelAccum::add_outer: shape mismatch");
  }
  if (weight == 0.0) return;
  for (Index j = 0; j < v.size(); ++j) {
    for (Index i = 0; i < u.size(); ++i) {
      acc_(i, j) += static_cast<long double>(u(i) * v(j)) * weight;
    }
  }
}

Matrix KernelAccum::value() const { return acc_.cast<double>(); }

PinvBundle pinv(const Matrix& m, std::optional<double> rank_tol) {
  require_finite(m, "pinv input");
  if (m.rows() == 0 || m.cols() == 0) {
    throw InvalidArgumentError("pinv: empty matrix");
  }
  if (rank_tol && !(*rank_tol > 0.0)) {
    throw InvalidArgumentError("pinv: rank tolerance must be positive");
  }

  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  if (!sigma.allFinite() || !svd.matrixU().allFinite() ||
      !svd.matrixV().allFinite()) {
    throw SvdError("SVD did not converge to finite factors after " +
                   std::to_string(m.rows() * m.cols()) + " rotations");
  }

  const double eps = std::numeric_limits<double>::epsilon();
  const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
  const double tol =
      rank_tol ? *rank_tol
               : static_cast<double>(std::max(m.rows(), m.cols())) * eps *
                     sigma_max;

  PinvBundle out;
  out.m = m;
  out.tol_used = tol;
  out.singular_values = sigma;

  Index r = 0;
  while (r < sigma.size() && sigma(r) > tol) ++r;
  out.rank = r;

  Vector inv_sigma = Vector::Zero(sigma.size());
  for (Index i = 0; i < r; ++i) inv_sigma(i) = 1.0 / sigma(i);
  // M† = V Σ⁺ Uᵀ with the truncated spectrum.
  Matrix vs = svd.matrixV() * inv_sigma.asDiagonal();
  out.pinv = ld_prod(vs, Matrix(svd.matrixU().transpose()));

  out.proj_e = Matrix::Identity(m.rows(), m.rows()) - ld_prod(m, out.pinv);
  out.proj_f =
      Matrix::Identity(m.cols(), m.cols()) - ld_prod(out.pinv, m);
  return out;
}

Index numerical_rank(const Matrix& m, std::optional<double> rank_tol) {
  require_finite(m, "rank input");
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& sigma = svd.singularValues();
  const double eps = std::numeric_limits<double>::epsilon();
  const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
  const double tol =
      rank_tol ? *rank_tol
               : static_cast<double>(std::max(m.rows(), m.cols())) * eps *
                     sigma_max;
  Index r = 0;
  while (r < sigma.size() && sigma(r) > tol) ++r;
  return r;
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

PenroseResiduals penrose_residuals(const PinvBundle& b) {
  const Matrix mpm = ld_prod(ld_prod(b.m, b.pinv), b.m);
  const Matrix pmp = ld_prod(ld_prod(b.pinv, b.m), b.pinv);
  const Matrix mp = ld_prod(b.m, b.pinv);
  const Matrix pm = ld_prod(b.pinv, b.m);
  PenroseResiduals r;
  r.eq1 = max_norm(Matrix(mpm - b.m));
  r.eq2 = max_norm(Matrix(pmp - b.pinv));
  r.eq3 = max_norm(Matrix(mp.transpose() - mp));
  r.eq4 = max_norm(Matrix(pm.transpose() - pm));
  return r;
}

}  // namespace structcond
