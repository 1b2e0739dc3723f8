#include <doctest.h>

#include <Eigen/QR>

#include <cmath>
#include <limits>

#include "structcond/corpus.hpp"
#include "structcond/linalg.hpp"
#include "structcond/rng.hpp"

using namespace structcond;

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Independent rank oracle: column-pivoted QR with the same absolute cutoff
// convention as the SVD path.
Index rank_oracle_qr(const Matrix& m) {
  Eigen::ColPivHouseholderQR<Matrix> qr(m);
  const Matrix r = qr.matrixR().topLeftCorner(
      std::min(m.rows(), m.cols()), std::min(m.rows(), m.cols()));
  const double scale = r.cwiseAbs().diagonal().maxCoeff();
  const double tol =
      static_cast<double>(std::max(m.rows(), m.cols())) * kEps * scale;
  Index rank = 0;
  for (Index i = 0; i < r.rows(); ++i) {
    if (std::abs(r(i, i)) > tol) ++rank;
  }
  return rank;
}

}  // namespace

TEST_CASE("pinv of the identity") {
  const Matrix id = Matrix::Identity(3, 3);
  const PinvBundle b = pinv(id);
  CHECK(b.rank == 3);
  CHECK(max_norm(Matrix(b.pinv - id)) <= 10 * kEps);
  CHECK(max_norm(b.proj_e) <= 10 * kEps);
  CHECK(max_norm(b.proj_f) <= 10 * kEps);
}

TEST_CASE("pinv truncates a zero singular value") {
  Matrix m(2, 2);
  m << 1, 0, 0, 0;
  const PinvBundle b = pinv(m);
  CHECK(b.rank == 1);
  CHECK(b.pinv(0, 0) == doctest::Approx(1.0));
  CHECK(std::abs(b.pinv(1, 1)) <= 10 * kEps);
}

TEST_CASE("pinv of a column vector") {
  Matrix m(2, 1);
  m << 1, 1;
  const PinvBundle b = pinv(m);
  CHECK(b.rank == 1);
  CHECK(b.pinv(0, 0) == doctest::Approx(0.5));
  CHECK(b.pinv(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("duplicated-node cv matrix has numerical rank 4") {
  const Matrix m = build_cv(duplicate_node_cv_5x6());
  CHECK(max_norm(Vector(m.row(0) - m.row(1))) == 0.0);  // rows 1, 2 equal
  const PinvBundle b = pinv(m);
  CHECK(b.rank == 4);
  CHECK(rank_oracle_qr(m) == 4);

  // The reference-table instance is also numerically rank 4: the smooth
  // columns are spanned by four directions at working precision.
  const PinvBundle r = pinv(build_cv(reference_cv_5x6()));
  CHECK(r.rank == 4);
}

TEST_CASE("pinv rejects bad inputs") {
  Matrix m(1, 1);
  m << std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(pinv(m), InvalidArgumentError);
  CHECK_THROWS_AS(pinv(Matrix::Identity(2, 2), -1.0), InvalidArgumentError);
}

TEST_CASE("hadamard") {
  Matrix a(2, 2), b(2, 2), expect(2, 2);
  a << 1, 2, 3, 4;
  b << 2, 0, 1, 1;
  expect << 2, 0, 3, 4;
  CHECK(max_norm(Matrix(hadamard(a, b) - expect)) == 0.0);
  CHECK(max_norm(Matrix(hadamard(a, Matrix::Ones(2, 2)) - a)) == 0.0);
  CHECK(max_norm(hadamard(a, Matrix::Zero(2, 2))) == 0.0);
  CHECK_THROWS_AS(hadamard(a, Matrix::Zero(2, 3)), InvalidArgumentError);
}

TEST_CASE("pseudo_divide follows the pass-through convention") {
  Matrix a(2, 1), b(2, 1), expect(2, 1);
  a << 4, 0;
  b << 2, 0;
  expect << 2, 0;
  CHECK(max_norm(Matrix(pseudo_divide(a, b) - expect)) == 0.0);

  Matrix c(2, 2);
  c << 1, 2, 0, 4;
  const Matrix self = pseudo_divide(c, c);
  CHECK(self(0, 0) == 1.0);
  CHECK(self(0, 1) == 1.0);
  CHECK(self(1, 1) == 1.0);
  CHECK(self(1, 0) == 0.0);  // 0^dd * 0 = 0

  Matrix num(1, 2), den(1, 2);
  num << 3, 5;
  den << 0, 2;
  const Matrix out = pseudo_divide(num, den);
  CHECK(out(0, 0) == 3.0);  // zero divisor passes the numerator through
  CHECK(out(0, 1) == 2.5);
}

TEST_CASE("norms") {
  CHECK(max_norm(Matrix(Matrix::Identity(2, 2))) == 1.0);
  CHECK(inf_norm(Matrix(Matrix::Identity(2, 2))) == 1.0);
  Matrix m(2, 2);
  m << 1, -3, 2, 0;
  const auto [mx, inf] = norms(m);
  CHECK(mx == 3.0);
  CHECK(inf == 4.0);
  CHECK(norms(Matrix::Zero(3, 2)) == std::pair<double, double>{0.0, 0.0});
}

TEST_CASE("penrose equations and projectors over the seeded corpus") {
  Rng rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    const Index m = 2 + static_cast<Index>(rng.next_u64() % 11);
    const Index n = 2 + static_cast<Index>(rng.next_u64() % 11);
    Matrix mat;
    if (trial % 3 == 0) {
      const Index r = 1 + static_cast<Index>(rng.next_u64() %
                                             static_cast<std::uint64_t>(
                                                 std::min(m, n)));
      mat = random_rank_deficient_matrix(rng, m, n, r);
    } else {
      mat = random_matrix(rng, m, n);
    }
    const PinvBundle b = pinv(mat);
    const PenroseResiduals res = penrose_residuals(b);
    const double scale1 = 10.0 * b.tol_used * max_norm(mat);
    CHECK(res.eq1 <= scale1);
    const double sigma_r =
        b.rank > 0 ? b.singular_values(b.rank - 1) : 1.0;
    const double tol2 = static_cast<double>(std::max(m, n)) * kEps / sigma_r;
    CHECK(res.eq2 <= 10.0 * tol2 * max_norm(b.pinv));
    // The products M M+ and M+ M carry rounding at the condition scale.
    const double scale_sym = 10.0 * b.tol_used / sigma_r;
    CHECK(res.eq3 <= scale_sym);
    CHECK(res.eq4 <= scale_sym);

    // Projector identities: E M and M F vanish at the truncation level.
    CHECK(max_norm(ld_prod(b.proj_e, mat)) <= scale1);
    CHECK(max_norm(ld_prod(mat, b.proj_f)) <= scale1);
    // Projectors are symmetric and idempotent.
    CHECK(max_norm(Matrix(b.proj_e.transpose() - b.proj_e)) <= scale_sym);
    CHECK(max_norm(Matrix(ld_prod(b.proj_e, b.proj_e) - b.proj_e)) <=
          scale_sym);
    CHECK(max_norm(Matrix(ld_prod(b.proj_f, b.proj_f) - b.proj_f)) <=
          scale_sym);

    // Involution: (M+)+ recovers M.
    const PinvBundle bb = pinv(b.pinv);
    CHECK(max_norm(Matrix(bb.pinv - mat)) <= 100.0 * kEps * max_norm(mat));

    // Numerical rank agrees with the QR oracle.
    CHECK(b.rank == rank_oracle_qr(mat));
  }
}

TEST_CASE("pseudo_divide inverts hadamard where the factor is nonzero") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_matrix(rng, 4, 3);
    Matrix b = random_matrix(rng, 4, 3);
    b(trial % 4, trial % 3) = 0.0;
    const Matrix back = pseudo_divide(hadamard(a, b), b);
    for (Index i = 0; i < a.rows(); ++i) {
      for (Index j = 0; j < a.cols(); ++j) {
        if (b(i, j) != 0.0) {
          CHECK(std::abs(back(i, j) - a(i, j)) <=
                4.0 * kEps * std::abs(a(i, j)));
        } else {
          CHECK(back(i, j) == 0.0);
        }
      }
    }
  }
}

TEST_CASE("extended-precision products match plain arithmetic on small cases") {
  Matrix a(2, 2), b(2, 2);
  a << 1, 2, 3, 4;
  b << 5, 6, 7, 8;
  Matrix expect(2, 2);
  expect << 19, 22, 43, 50;
  CHECK(max_norm(Matrix(ld_prod(a, b) - expect)) == 0.0);

  Vector v(2);
  v << 1, -1;
  CHECK(ld_dot(v, v) == 2.0);
  CHECK(max_norm(Vector(ld_prod(a, v) - Vector(a * v))) == 0.0);

  Vector w(2);
  w << 2, 3;
  const Matrix scaled = ld_scaled_prod(a, w, b);
  CHECK(scaled(0, 0) == doctest::Approx(1 * 2 * 5 + 2 * 3 * 7));
}
