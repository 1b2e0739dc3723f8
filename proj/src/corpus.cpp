#include "structcond/corpus.hpp"

#include <cmath>

namespace structcond {

CvParams random_cv(Rng& rng, Index m, Index l, Index n,
                   bool duplicate_first_rows) {
  CvParams p;
  p.n = n;
  p.c = Vector(m);
  for (Index i = 0; i < m; ++i) p.c(i) = rng.uniform(1.0, 2.0);
  if (duplicate_first_rows && m >= 2) p.c(1) = p.c(0);
  p.d = Vector(l);
  for (Index j = 0; j < l; ++j) p.d(j) = rng.uniform(-2.0, -1.0);
  return p;
}

CvParams separated_cv(Rng& rng, Index m, Index l, Index n) {
  CvParams p;
  p.n = n;
  p.c = Vector(m);
  const double step_c = 1.5 / static_cast<double>(m);
  for (Index i = 0; i < m; ++i) {
    p.c(i) = 1.0 + step_c * (static_cast<double>(i) + 0.2 +
                             0.6 * rng.uniform01());
  }
  p.d = Vector(l);
  const double step_d = 1.2 / static_cast<double>(std::max<Index>(l, 1));
  for (Index j = 0; j < l; ++j) {
    p.d(j) = -2.2 + step_d * (static_cast<double>(j) + 0.2 +
                              0.6 * rng.uniform01());
  }
  return p;
}

QsParams random_qs(Rng& rng, Index n) {
  QsParams p;
  p.a = rng.normal_vector(n - 1);
  p.e = rng.normal_vector(n - 2);
  p.b = rng.normal_vector(n - 1);
  p.d = rng.normal_vector(n);
  p.f = rng.normal_vector(n - 1);
  p.g = rng.normal_vector(n - 2);
  p.h = rng.normal_vector(n - 1);
  return p;
}

QsParams conditioned_qs(Rng& rng, Index n, double max_kappa,
                        double min_entry_ratio) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    QsParams p = random_qs(rng, n);
    const PinvBundle b = pinv(build_qs(p));
    if (b.rank != n ||
        b.singular_values(0) / b.singular_values(n - 1) > max_kappa) {
      continue;
    }
    const Matrix abs_pinv = b.pinv.cwiseAbs();
    if (abs_pinv.minCoeff() >= min_entry_ratio * abs_pinv.maxCoeff()) {
      return p;
    }
  }
  throw Error("conditioned_qs: no admissible draw in 200 attempts");
}

GvTangentParams random_gv(Rng& rng, Index n) {
  GvTangentParams p;
  p.t = rng.normal_vector(n - 2);
  p.u = rng.normal_vector(n - 1);
  p.d = rng.normal_vector(n);
  p.v = rng.normal_vector(n - 1);
  p.w = rng.normal_vector(n - 2);
  return p;
}

GvTangentParams random_gv_rank_deficient(Rng& rng, Index n) {
  GvTangentParams p = random_gv(rng, n);
  p.d = Vector::Zero(n);
  p.v(0) = 0.0;
  p.v(n - 2) = 100.0;
  return p;
}

QsParams scale_qs_corners(QsParams p, int k) {
  const double s = std::pow(10.0, k);
  p.a *= s;
  p.e *= s;
  p.h *= s;
  return p;
}

Matrix random_matrix(Rng& rng, Index rows, Index cols) {
  return rng.normal_matrix(rows, cols);
}

Matrix random_rank_deficient_matrix(Rng& rng, Index rows, Index cols,
                                    Index r) {
  const Matrix left = rng.normal_matrix(rows, r);
  const Matrix right = rng.normal_matrix(r, cols);
  return ld_prod(left, right);
}

CvParams reference_cv_5x6() {
  CvParams p;
  p.n = 6;
  p.c = Vector(5);
  p.c << 1.0, 2.0, 0.5, -1.0 / 30.0, 1.0 / 40.0;
  p.d = Vector(3);
  p.d << 12.0, -0.75e7, 25e3;
  return p;
}

CvParams duplicate_node_cv_5x6() {
  CvParams p = reference_cv_5x6();
  p.c(1) = 1.0;
  return p;
}

CvParams reference_cv_12x20() {
  CvParams p;
  p.n = 20;
  p.c = Vector(12);
  for (Index i = 0; i < 12; ++i) {
    p.c(i) = static_cast<double>(i + 1) / 20.0;
  }
  p.d = Vector(8);
  for (Index j = 0; j < 8; ++j) {
    p.d(j) = static_cast<double>(j + 5) / 50.0;
  }
  return p;
}

}  // namespace structcond
