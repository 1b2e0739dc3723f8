#include <doctest.h>

#include <cmath>
#include <limits>

#include "structcond/corpus.hpp"
#include "structcond/cv.hpp"
#include "structcond/oracle.hpp"
#include "structcond/rng.hpp"

using namespace structcond;

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

CvParams tiny_cv() {
  CvParams p;
  p.c = Vector::Constant(1, 2.0);
  p.d = Vector::Constant(1, 1.0);
  p.n = 2;
  return p;
}

}  // namespace

TEST_CASE("build_cv basic shapes") {
  const Matrix tiny = build_cv(tiny_cv());
  CHECK(tiny.rows() == 1);
  CHECK(tiny.cols() == 2);
  CHECK(tiny(0, 0) == 1.0);  // 1/(2-1)
  CHECK(tiny(0, 1) == 1.0);  // c^0

  CvParams vand;
  vand.c = Vector(2);
  vand.c << 2, 3;
  vand.d = Vector(0);
  vand.n = 2;
  const Matrix v = build_cv(vand);
  Matrix expect(2, 2);
  expect << 1, 2, 1, 3;
  CHECK(max_norm(Matrix(v - expect)) == 0.0);
}

TEST_CASE("node collision is rejected with indices") {
  CvParams p;
  p.c = Vector(2);
  p.c << 1.0, 2.0;
  p.d = Vector::Constant(1, 2.0);
  p.n = 3;
  CHECK_THROWS_AS(build_cv(p), NodeCollisionError);
  const CvValidation v = check_cv(p);
  REQUIRE(v.collisions.size() == 1);
  CHECK(v.collisions[0].i == 1);
  CHECK(v.collisions[0].j == 0);
}

TEST_CASE("near collisions produce a warning but build") {
  CvParams p;
  p.c = Vector::Constant(1, 1.0);
  p.d = Vector::Constant(1, 1.0 + 1e-14);
  p.n = 1;
  const CvValidation v = check_cv(p);
  CHECK(v.collisions.empty());
  CHECK(v.near_collisions.size() == 1);
  CHECK(build_cv(p).allFinite());
}

TEST_CASE("cv_aux on the tiny instance") {
  const CvAux aux = cv_aux(tiny_cv());
  CHECK(aux.m1(0, 0) == -1.0);
  CHECK(aux.m1(0, 1) == 0.0);
  CHECK(aux.m2(0, 0) == 1.0);
  CHECK(aux.m2(0, 1) == 0.0);
  CHECK(aux.q(0, 0) == 1.0);
  CHECK(aux.q(0, 1) == 1.0);
  CHECK(aux.d_ext(0) == 1.0);
  CHECK(aux.d_ext(1) == 0.0);
}

TEST_CASE("cv_aux special shapes") {
  // Pure Cauchy: no polynomial columns, zero nodes permitted.
  CvParams cauchy;
  cauchy.c = Vector(2);
  cauchy.c << 0.0, 1.0;
  cauchy.d = Vector(2);
  cauchy.d << -1.0, -2.0;
  cauchy.n = 2;
  const Matrix m = build_cv(cauchy);
  const CvAux aux = cv_aux(cauchy);
  CHECK(max_norm(Matrix(aux.m1 + m)) == 0.0);
  CHECK(max_norm(Matrix(aux.m2 - m)) == 0.0);

  // Pure Vandermonde: the squared-Cauchy factor is empty.
  CvParams vand;
  vand.c = Vector(3);
  vand.c << 1, 2, 3;
  vand.d = Vector(0);
  vand.n = 3;
  const CvAux va = cv_aux(vand);
  CHECK(max_norm(va.m2) == 0.0);
  CHECK(max_norm(va.d_ext) == 0.0);

  // Zero node with a nontrivial polynomial block is out of domain.
  CvParams bad = vand;
  bad.c(0) = 0.0;
  CHECK_THROWS_AS(cv_aux(bad), DomainError);
}

TEST_CASE("analytic derivatives on the tiny instance") {
  const auto derivs = cv_derivatives(tiny_cv());
  REQUIRE(derivs.size() == 2);
  const Matrix dc = derivs[0].to_dense();
  CHECK(dc(0, 0) == doctest::Approx(-1.0));
  CHECK(dc(0, 1) == doctest::Approx(0.0));
  const Matrix dd = derivs[1].to_dense();
  CHECK(dd(0, 0) == doctest::Approx(1.0));
  CHECK(dd(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("derivatives match central finite differences over seeded nodes") {
  Rng rng(606);
  for (int trial = 0; trial < 50; ++trial) {
    const Index m = 2 + static_cast<Index>(rng.next_u64() % 5);
    const Index l = static_cast<Index>(rng.next_u64() %
                                       static_cast<std::uint64_t>(m + 1));
    const Index n = l + 1 + static_cast<Index>(rng.next_u64() % 3);
    const CvParams p = random_cv(rng, m, l, n);
    const FdReport report = fd_check(cv_model(p), cv_param_set(p));
    CHECK(report.max_rel_error <= 1e-6);
  }
}

TEST_CASE("framework equivalence for the closed-form bounds") {
  Rng rng(2025);
  for (int trial = 0; trial < 50; ++trial) {
    const Index m = 3 + static_cast<Index>(rng.next_u64() % 8);
    const Index l = static_cast<Index>(rng.next_u64() %
                                       static_cast<std::uint64_t>(m + 1));
    const Index extra = 1 + static_cast<Index>(rng.next_u64() % 3);
    const Index n = std::min<Index>(l + extra, m + 1);
    const bool deficient = trial % 3 == 0 && m >= 3;
    const CvParams p = random_cv(rng, m, l, std::max<Index>(n, l), deficient);

    const CnReport closed = cv_pinv_cn_upper(p);
    const CnReport engine = pinv_cn_upper(cv_model(p), cv_param_set(p));
    CHECK(rel_diff(closed.mixed, engine.mixed) <= 8 * kEps);
    CHECK(rel_diff(closed.componentwise, engine.componentwise) <= 8 * kEps);
    CHECK(max_norm(Matrix(closed.kernel - engine.kernel)) <=
          8 * kEps * max_norm(closed.kernel));

    const Vector b = rng.normal_vector(p.m());
    const CnReport ls_closed = cv_ls_cn_upper(p, b);
    const CnReport ls_engine =
        ls_cn_upper(make_ls_problem(cv_model(p), cv_param_set(p), b));
    CHECK(rel_diff(ls_closed.mixed, ls_engine.mixed) <= 8 * kEps);
    CHECK(rel_diff(ls_closed.componentwise, ls_engine.componentwise) <=
          8 * kEps);

    if (closed.rank == p.n) {
      const CnReport ex_closed = cv_pinv_cn_exact_fullrank(p);
      const CnReport ex_engine =
          pinv_cn_exact_fullrank(cv_model(p), cv_param_set(p));
      CHECK(rel_diff(ex_closed.mixed, ex_engine.mixed) <= 8 * kEps);
      CHECK(rel_diff(ex_closed.componentwise, ex_engine.componentwise) <=
            8 * kEps);
      CHECK(ex_closed.mixed <= closed.mixed * (1 + 8 * kEps));
      CHECK(ex_closed.componentwise <=
            closed.componentwise * (1 + 8 * kEps));

      const CnReport exls_closed = cv_ls_cn_exact_fullrank(p, b);
      const CnReport exls_engine = ls_cn_exact_fullrank(
          make_ls_problem(cv_model(p), cv_param_set(p), b));
      CHECK(rel_diff(exls_closed.mixed, exls_engine.mixed) <= 8 * kEps);
      CHECK(exls_closed.mixed <= ls_closed.mixed * (1 + 8 * kEps));
      CHECK(exls_closed.componentwise <=
            ls_closed.componentwise * (1 + 8 * kEps));
    }
  }
}

TEST_CASE("reference 5x6 instance reproduces the published bounds") {
  const CvParams p = reference_cv_5x6();
  const CnReport str = cv_pinv_cn_upper(p);
  CHECK(str.rank == 4);
  CHECK(rel_diff(str.mixed, 8.4149) <= 1e-2);
  CHECK(rel_diff(str.componentwise, 63.7873) <= 1e-2);
  const CnReport unstr = pinv_cn_unstructured(build_cv(p));
  CHECK(rel_diff(unstr.mixed, 1.9309e4) <= 1e-2);
  CHECK(rel_diff(unstr.componentwise, 2.6103e6) <= 1e-2);
}

TEST_CASE("reference instance least squares with a fixed right-hand side") {
  const CvParams p = reference_cv_5x6();
  const Vector ones = Vector::Ones(5);
  const CnReport bound = cv_ls_cn_upper(p, ones);
  CHECK(bound.mixed > 0.0);
  CHECK(std::isfinite(bound.mixed));
  CHECK(bound.componentwise > 0.0);
  CHECK(std::isfinite(bound.componentwise));

  // The perturbation search stays below the bound; the rank-4 instance
  // needs perturbations well under sigma_4 ~ 1e-6 to keep its rank.
  PerturbSpec spec;
  spec.mode = PerturbMode::monte_carlo;
  spec.trials = 50;
  spec.epsilon = 1e-9;
  const LsProblem problem =
      make_ls_problem(cv_model(p), cv_param_set(p), ones);
  const OracleEstimate est = estimate_ls_cn(problem, spec);
  if (!est.inconclusive) {
    CHECK(est.mixed_lb <= bound.mixed * (1 + 1e-8));
  }
}

TEST_CASE("wide instance: unstructured versus structured bound ratio") {
  // The 12x20 grid with the colliding pole nodes shifted off the grid.
  CvParams p = reference_cv_12x20();
  p.d(0) *= 1.0 + 1e-9;
  p.d(5) *= 1.0 + 1e-9;
  Rng rng(121);
  const Vector b = rng.normal_vector(p.m());
  const CnReport str = cv_ls_cn_upper(p, b);
  const CnReport unstr = ls_cn_unstructured(build_cv(p), b);
  CHECK(std::isfinite(str.mixed));
  CHECK(std::isfinite(unstr.mixed));
  CHECK(str.mixed > 0.0);
  MESSAGE("unstructured / structured least-squares bound ratio: ",
          unstr.mixed / str.mixed, " (componentwise ",
          unstr.componentwise / str.componentwise, ")");
}

TEST_CASE("b = 0 least squares input is degenerate") {
  const CvParams p = tiny_cv();
  CHECK_THROWS_AS(cv_ls_cn_upper(p, Vector::Zero(1)), DegenerateInputError);
}

TEST_CASE("exact formulas refuse rank-deficient instances") {
  Rng rng(77);
  // Square with duplicated rows: the column rank drops below n.
  const CvParams p = random_cv(rng, 5, 2, 5, /*duplicate_first_rows=*/true);
  CHECK_THROWS_AS(cv_pinv_cn_exact_fullrank(p), NotFullColumnRankError);
}
