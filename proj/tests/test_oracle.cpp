#include <doctest.h>

#include <cmath>
#include <limits>

#include "structcond/corpus.hpp"
#include "structcond/oracle.hpp"
#include "structcond/rng.hpp"

using namespace structcond;

namespace {

MatrixModel fixed_matrix_model(const Matrix& m) {
  // One parameter the matrix does not depend on: only b perturbations act.
  MatrixModel model;
  model.rows = m.rows();
  model.cols = m.cols();
  model.eval = [m](const Vector&) { return m; };
  model.derivs = [m](const Vector&) {
    return std::vector<DerivDescriptor>{
        DerivDescriptor::dense(Matrix(Matrix::Zero(m.rows(), m.cols())))};
  };
  model.domain_check = nullptr;
  return model;
}

ParamSet one_param(double value) {
  ParamSet psi;
  psi.values = Vector::Constant(1, value);
  psi.labels = {"psi"};
  return psi;
}

}  // namespace

TEST_CASE("zero-size perturbations are always accepted") {
  const Matrix m = build_cv(duplicate_node_cv_5x6());
  const MatrixModel model = cv_model(duplicate_node_cv_5x6());
  const ParamSet psi = cv_param_set(duplicate_node_cv_5x6());
  const PinvBundle ref = pinv(m);
  CHECK(perturbation_accepted(model, psi, Vector::Zero(psi.size()), ref));

  PerturbSpec spec;
  spec.epsilon = 0.0;
  spec.seed = 7;
  Rng rng(7);
  const auto dpsi = sample_perturbation(psi, spec, model, rng);
  REQUIRE(dpsi.has_value());
  CHECK(max_norm(*dpsi) == 0.0);
}

TEST_CASE("full-column-rank instances accept every small perturbation") {
  Rng rng(515);
  const CvParams p = random_cv(rng, 5, 2, 4);
  const MatrixModel model = cv_model(p);
  const ParamSet psi = cv_param_set(p);
  PerturbSpec spec;
  spec.epsilon = 1e-6;
  spec.seed = 99;
  Rng sample_rng(99);
  for (int i = 0; i < 50; ++i) {
    CHECK(sample_perturbation(psi, spec, model, sample_rng).has_value());
  }
}

TEST_CASE("duplicated-node vandermonde accepts only tied perturbations") {
  // Square Vandermonde with a duplicated node: the rank deficiency comes
  // from the equal rows alone, so splitting the nodes restores full rank.
  CvParams p;
  p.c = Vector(3);
  p.c << 1.0, 1.0, 2.0;
  p.d = Vector(0);
  p.n = 3;
  const MatrixModel model = cv_model(p);
  const ParamSet psi = cv_param_set(p);
  const PinvBundle ref = pinv(build_cv(p));
  REQUIRE(ref.rank == 2);

  const double eps = 1e-7;
  Vector tied = Vector::Zero(psi.size());
  tied(0) = eps * psi.values(0);
  tied(1) = eps * psi.values(1);  // c1 and c2 move together
  CHECK(perturbation_accepted(model, psi, tied, ref));

  Vector split = tied;
  split(1) = -split(1);  // independent perturbation raises the rank to 3
  CHECK_FALSE(perturbation_accepted(model, psi, split, ref));
}

TEST_CASE("duplicated-node 5x6 instance keeps its rank under node splits") {
  // Here the fifth singular value is pinned near 1e-17 by the almost
  // constant pole columns, so splitting the duplicated nodes does not move
  // the numerical rank; only the spectral smallness guard rejects, once
  // the perturbation reaches the sigma_4 ~ 1e-6 scale.
  const CvParams p = duplicate_node_cv_5x6();
  const MatrixModel model = cv_model(p);
  const ParamSet psi = cv_param_set(p);
  const PinvBundle ref = pinv(build_cv(p));
  REQUIRE(ref.rank == 4);

  Vector tied = Vector::Zero(psi.size());
  tied(0) = 1e-7 * psi.values(0);
  tied(1) = 1e-7 * psi.values(1);
  CHECK(perturbation_accepted(model, psi, tied, ref));
  Vector split = tied;
  split(1) = -split(1);
  CHECK(perturbation_accepted(model, psi, split, ref));

  Vector large = Vector::Zero(psi.size());
  large(0) = 1e-5 * psi.values(0);
  CHECK_FALSE(perturbation_accepted(model, psi, large, ref));
}

TEST_CASE("single-parameter estimates converge to the exact value") {
  Rng rng(31);
  const Matrix a = Matrix::Identity(3, 3) + 0.2 * rng.normal_matrix(3, 3);
  const Matrix b = rng.normal_matrix(3, 3);
  MatrixModel model;
  model.rows = 3;
  model.cols = 3;
  model.eval = [a, b](const Vector& psi) { return Matrix(a + psi(0) * b); };
  model.derivs = [b](const Vector&) {
    return std::vector<DerivDescriptor>{DerivDescriptor::dense(b)};
  };
  model.domain_check = nullptr;
  const ParamSet psi = one_param(0.7);

  PerturbSpec spec;
  spec.mode = PerturbMode::extrapolated;
  spec.seed = 3;
  const OracleEstimate est = estimate_pinv_cn(model, psi, spec);
  const CnReport exact = pinv_cn_exact_fullrank(model, psi);
  const CnReport upper = pinv_cn_upper(model, psi);
  CHECK(est.mixed_lb >= 0.999 * exact.mixed);
  CHECK(est.mixed_lb <= upper.mixed * (1 + 1e-8));
  CHECK(est.componentwise_lb >= 0.999 * exact.componentwise);
  CHECK(est.componentwise_lb <= upper.componentwise * (1 + 1e-8));
}

TEST_CASE("vertex enumeration reaches the exact full-rank values") {
  Rng rng(616);
  for (int trial = 0; trial < 10; ++trial) {
    const Index m = 4 + static_cast<Index>(rng.next_u64() % 2);
    const Index l = static_cast<Index>(rng.next_u64() % 3);
    const Index n = std::max<Index>(l, 2);
    const CvParams p = random_cv(rng, m, l, n);
    const MatrixModel model = cv_model(p);
    const ParamSet psi = cv_param_set(p);
    const CnReport exact = pinv_cn_exact_fullrank(model, psi);
    const CnReport upper = pinv_cn_upper(model, psi);

    PerturbSpec spec;
    spec.mode = PerturbMode::extrapolated;
    spec.seed = static_cast<std::uint64_t>(trial);
    const OracleEstimate est = estimate_pinv_cn(model, psi, spec);
    CHECK_FALSE(est.inconclusive);
    CHECK(est.mixed_lb >= 0.999 * exact.mixed);
    CHECK(est.mixed_lb <= upper.mixed * (1 + 1e-8));
    CHECK(est.componentwise_lb >= 0.999 * exact.componentwise);
    CHECK(est.componentwise_lb <= upper.componentwise * (1 + 1e-8));
  }
}

TEST_CASE("4x2 vandermonde exact values match the sign-vertex oracle") {
  CvParams p;
  p.c = Vector(4);
  p.c << 1, 2, 3, 4;
  p.d = Vector(0);
  p.n = 2;
  const MatrixModel model = cv_model(p);
  const ParamSet psi = cv_param_set(p);

  PerturbSpec spec;
  spec.mode = PerturbMode::extrapolated;
  const CnReport exact = pinv_cn_exact_fullrank(model, psi);
  const OracleEstimate est = estimate_pinv_cn(model, psi, spec);
  CHECK(std::abs(est.mixed_lb - exact.mixed) <= 1e-6 * exact.mixed);
  CHECK(std::abs(est.componentwise_lb - exact.componentwise) <=
        1e-6 * exact.componentwise);

  Vector b(4);
  b << 1, 0, 0, 1;
  const LsProblem problem = make_ls_problem(model, psi, b);
  const CnReport ls_exact = ls_cn_exact_fullrank(problem);
  const OracleEstimate ls_est = estimate_ls_cn(problem, spec);
  CHECK(std::abs(ls_est.mixed_lb - ls_exact.mixed) <= 1e-6 * ls_exact.mixed);
  CHECK(std::abs(ls_est.componentwise_lb - ls_exact.componentwise) <=
        1e-6 * ls_exact.componentwise);
}

TEST_CASE("b-only perturbations recover the right-hand-side term") {
  Rng rng(717);
  const Matrix m = Matrix::Identity(3, 3) + 0.3 * rng.normal_matrix(3, 3);
  const Vector b = rng.normal_vector(3);
  const MatrixModel model = fixed_matrix_model(m);
  const LsProblem problem = make_ls_problem(model, one_param(1.0), b);

  PerturbSpec spec;
  spec.mode = PerturbMode::extrapolated;
  const OracleEstimate est = estimate_ls_cn(problem, spec);
  const Vector expected =
      ld_prod(Matrix(problem.ws.bundle.pinv.cwiseAbs()), Vector(b.cwiseAbs()));
  CHECK(est.mixed_lb ==
        doctest::Approx(inf_norm(expected) / inf_norm(problem.x))
            .epsilon(1e-6));
}

TEST_CASE("least-squares estimates reach the exact full-rank values") {
  Rng rng(818);
  for (int trial = 0; trial < 8; ++trial) {
    const CvParams p = random_cv(rng, 5, 1, 3);
    const Vector b = rng.normal_vector(5);
    const LsProblem problem =
        make_ls_problem(cv_model(p), cv_param_set(p), b);
    const CnReport exact = ls_cn_exact_fullrank(problem);
    const CnReport upper = ls_cn_upper(problem);

    PerturbSpec spec;
    spec.mode = PerturbMode::extrapolated;
    spec.seed = static_cast<std::uint64_t>(trial);
    const OracleEstimate est = estimate_ls_cn(problem, spec);
    CHECK(est.mixed_lb >= 0.999 * exact.mixed);
    CHECK(est.mixed_lb <= upper.mixed * (1 + 1e-8));
    CHECK(est.componentwise_lb >= 0.999 * exact.componentwise);
    CHECK(est.componentwise_lb <= upper.componentwise * (1 + 1e-8));
  }
}

TEST_CASE("estimates stay below the bounds on rank-deficient instances") {
  Rng rng(919);
  for (int trial = 0; trial < 6; ++trial) {
    const Index n = 5 + static_cast<Index>(rng.next_u64() % 3);
    const GvTangentParams gp = random_gv_rank_deficient(rng, n);
    const MatrixModel model = gv_model(gp);
    const ParamSet psi = gv_param_set(gp);
    const CnReport upper = pinv_cn_upper(model, psi);

    PerturbSpec spec;
    spec.mode = PerturbMode::monte_carlo;
    spec.trials = 200;
    spec.epsilon = 1e-7;
    spec.seed = static_cast<std::uint64_t>(trial);
    const OracleEstimate est = estimate_pinv_cn(model, psi, spec);
    if (!est.inconclusive) {
      CHECK(est.mixed_lb <= upper.mixed * (1 + 1e-8));
      CHECK(est.componentwise_lb <= upper.componentwise * (1 + 1e-8));
    }
  }
}

TEST_CASE("an instance whose every vertex changes rank is inconclusive") {
  Matrix a(2, 2);
  a << 1, 1, 1, 1;
  Matrix dir = Matrix::Zero(2, 2);
  dir(1, 1) = 1.0;
  MatrixModel model;
  model.rows = 2;
  model.cols = 2;
  model.eval = [a, dir](const Vector& psi) {
    return Matrix(a + (psi(0) - 1.0) * dir);
  };
  model.derivs = [dir](const Vector&) {
    return std::vector<DerivDescriptor>{DerivDescriptor::dense(dir)};
  };
  model.domain_check = nullptr;
  // At psi = 1 the matrix is all-ones with rank 1; any vertex perturbation
  // of psi moves the (2,2) entry and restores rank 2.
  PerturbSpec spec;
  spec.mode = PerturbMode::sign_vertices;
  spec.epsilon = 1e-6;
  const OracleEstimate est = estimate_pinv_cn(model, one_param(1.0), spec);
  CHECK(est.inconclusive);
  CHECK(est.rejected == 2);
}

TEST_CASE("determinism and monotonicity of the monte carlo search") {
  Rng rng(2121);
  const QsParams p = random_qs(rng, 5);
  const MatrixModel model = qs_model(p);
  const ParamSet psi = qs_param_set(p);

  PerturbSpec spec;
  spec.mode = PerturbMode::monte_carlo;
  spec.trials = 64;
  spec.seed = 42;
  spec.epsilon = 1e-6;
  const OracleEstimate a = estimate_pinv_cn(model, psi, spec);
  const OracleEstimate b = estimate_pinv_cn(model, psi, spec);
  CHECK(a.mixed_lb == b.mixed_lb);
  CHECK(a.componentwise_lb == b.componentwise_lb);

  PerturbSpec longer = spec;
  longer.trials = 256;
  const OracleEstimate c = estimate_pinv_cn(model, psi, longer);
  CHECK(c.mixed_lb >= a.mixed_lb);
  CHECK(c.componentwise_lb >= a.componentwise_lb);
}

TEST_CASE("sign-vertex mode is capped") {
  Rng rng(3232);
  const Matrix m = rng.normal_matrix(5, 5);  // 25 parameters
  PerturbSpec spec;
  spec.mode = PerturbMode::sign_vertices;
  CHECK_THROWS_AS(
      estimate_pinv_cn(entrywise_model(m), entrywise_params(m), spec),
      InvalidArgumentError);
}

TEST_CASE("finite differences are near exact for linear models") {
  Rng rng(4343);
  const Matrix m = rng.normal_matrix(3, 4);
  const FdReport report = fd_check(entrywise_model(m), entrywise_params(m));
  CHECK(report.max_rel_error <= 1e-10);
}

TEST_CASE("fd_check skips scaled descriptors at zero parameters") {
  QsParams p;
  p.a = Vector::Zero(2);  // zero group
  p.e = Vector::Constant(1, 1.0);
  p.b = Vector::Ones(2);
  p.d = Vector::Ones(3);
  p.f = Vector::Ones(2);
  p.g = Vector::Constant(1, 1.0);
  p.h = Vector::Ones(2);
  const FdReport report = fd_check(qs_model(p), qs_param_set(p));
  bool saw_skip = false;
  for (const auto& e : report.entries) saw_skip |= e.skipped;
  CHECK(saw_skip);
  CHECK(report.max_rel_error <= 1e-6);
}

TEST_CASE("fd_check shrinks the step near domain boundaries") {
  CvParams p;
  p.c = Vector::Constant(1, 1.0 + 1e-6);
  p.d = Vector::Constant(1, 1.0);
  p.n = 1;
  const double exact_gap = p.c(0) - p.d(0);
  // A step of exactly the node gap lands on the pole; shrinking repairs it.
  const FdReport report = fd_check(cv_model(p), cv_param_set(p),
                                   [exact_gap](double) { return exact_gap; });
  for (const auto& e : report.entries) {
    CHECK_FALSE(e.skipped);
    CHECK(e.h_used < exact_gap);
  }
  // The surviving step is a tenth of the gap, so the difference quotient
  // carries an O((h/gap)^2) error.
  CHECK(report.max_rel_error <= 0.05);
}
