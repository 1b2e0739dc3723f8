#include <doctest.h>

#include <cmath>
#include <limits>

#include "structcond/corpus.hpp"
#include "structcond/oracle.hpp"
#include "structcond/qs.hpp"
#include "structcond/rng.hpp"

using namespace structcond;

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

QsParams ones_qs(Index n) {
  QsParams p;
  p.a = Vector::Ones(n - 1);
  p.e = Vector::Ones(n - 2);
  p.b = Vector::Ones(n - 1);
  p.d = Vector::Ones(n);
  p.f = Vector::Ones(n - 1);
  p.g = Vector::Ones(n - 2);
  p.h = Vector::Ones(n - 1);
  return p;
}

}  // namespace

TEST_CASE("build_qs telescoping products") {
  CHECK(max_norm(Matrix(build_qs(ones_qs(3)) - Matrix::Ones(3, 3))) == 0.0);

  QsParams zero_b = ones_qs(4);
  zero_b.b = Vector::Zero(3);
  const Matrix m = build_qs(zero_b);
  CHECK(max_norm(Matrix(m.triangularView<Eigen::StrictlyLower>())) == 0.0);

  QsParams p;
  p.a = Vector(2);
  p.a << 2, 3;
  p.e = Vector::Constant(1, 5.0);
  p.b = Vector(2);
  p.b << 7, 11;
  p.d = Vector::Ones(3);
  p.f = Vector(2);
  p.f << 13, 17;
  p.g = Vector::Constant(1, 19.0);
  p.h = Vector(2);
  p.h << 23, 29;
  const Matrix q = build_qs(p);
  CHECK(q(2, 0) == 3.0 * 5.0 * 7.0);
  CHECK(q(0, 2) == 13.0 * 19.0 * 29.0);
  CHECK(q(1, 0) == 2.0 * 7.0);
  CHECK(q(0, 1) == 13.0 * 23.0);
}

TEST_CASE("split_ldu masks and reconstruction") {
  const LduSplit id = split_ldu(Matrix(Matrix::Identity(3, 3)));
  CHECK(max_norm(id.l) == 0.0);
  CHECK(max_norm(id.um) == 0.0);
  CHECK(max_norm(Matrix(id.dm - Matrix::Identity(3, 3))) == 0.0);

  const LduSplit ones = split_ldu(Matrix(Matrix::Ones(3, 3)));
  CHECK(ones.l.cwiseAbs().sum() == 3.0);
  CHECK(ones.um.cwiseAbs().sum() == 3.0);
  CHECK(ones.dm.cwiseAbs().sum() == 3.0);

  Rng rng(5);
  const Matrix m = rng.normal_matrix(5, 5);
  const LduSplit s = split_ldu(m);
  CHECK(max_norm(Matrix(s.l + s.dm + s.um - m)) == 0.0);
  CHECK_THROWS_AS(split_ldu(Matrix(Matrix::Ones(2, 3))),
                  InvalidArgumentError);
}

TEST_CASE("cosine-sine pairs stay on the unit circle") {
  Vector t(7);
  t << 0.0, 1.0, -3.5, 1e8, -1e12, 1e150, -1e150;
  const auto [p, q] = cs_from_tangent(t);
  for (Index i = 0; i < t.size(); ++i) {
    CHECK(std::abs(p(i) * p(i) + q(i) * q(i) - 1.0) <= 4 * kEps);
  }
  CHECK(p(0) == 1.0);
  CHECK(q(0) == 0.0);
}

TEST_CASE("gv_expand with zero tangents collapses the chains") {
  Rng rng(17);
  const Index n = 5;
  GvTangentParams gp = random_gv(rng, n);
  gp.t = Vector::Zero(n - 2);
  const auto [qs, m] = gv_expand(gp);
  // Sines vanish, so everything below the first subdiagonal is zero and
  // the subdiagonal carries p_{i+1} u_i with p_n = 1.
  for (Index i = 2; i < n; ++i) {
    for (Index j = 0; j < i - 1; ++j) CHECK(m(i, j) == 0.0);
  }
  const auto [pc, qc] = cs_from_tangent(gp.t);
  for (Index i = 1; i <= n - 1; ++i) {
    const double p_next = i + 1 <= n - 1 ? pc(i - 1) : 1.0;
    CHECK(m(i, i - 1) == doctest::Approx(p_next * gp.u(i - 1)));
  }

  GvTangentParams gw = random_gv(rng, n);
  gw.w = Vector::Zero(n - 2);
  const Matrix mu = gv_expand(gw).second;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 2; j < n; ++j) CHECK(mu(i, j) == 0.0);
  }
}

TEST_CASE("rank-deficient tangent recipe zeroes the first row") {
  Rng rng(23);
  for (Index n : {5, 8}) {
    const GvTangentParams gp = random_gv_rank_deficient(rng, n);
    const Matrix m = gv_expand(gp).second;
    CHECK(max_norm(Vector(m.row(0).transpose())) == 0.0);
    const PinvBundle b = pinv(m);
    CHECK(b.rank < n);
  }
}

TEST_CASE("qs derivative descriptors") {
  const QsParams p = ones_qs(3);
  const auto derivs = qs_derivatives(p);
  REQUIRE(derivs.size() == 7 * 3 - 8);
  // Group order [a, e, b, d, f, g, h]; the d-group starts at offset
  // (n-1) + (n-2) + (n-1) = 5.
  const Matrix dd = derivs[5].to_dense();
  Matrix expect = Matrix::Zero(3, 3);
  expect(0, 0) = 1.0;
  CHECK(max_norm(Matrix(dd - expect)) == 0.0);
  CHECK_FALSE(derivs[5].scaled_by_param);

  // e_2 is the single dense lower block: all-ones matrix puts a single 1
  // at position (3,1).
  const Matrix fe = derivs[2].to_dense();
  Matrix fexpect = Matrix::Zero(3, 3);
  fexpect(2, 0) = 1.0;
  CHECK(max_norm(Matrix(fe - fexpect)) == 0.0);
  CHECK(derivs[2].scaled_by_param);
}

TEST_CASE("qs derivatives match finite differences") {
  Rng rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 3 + static_cast<Index>(rng.next_u64() % 6);
    const QsParams p = random_qs(rng, n);
    const FdReport report = fd_check(qs_model(p), qs_param_set(p));
    CHECK(report.max_rel_error <= 1e-6);
  }
}

TEST_CASE("gv derivatives match finite differences through the tangent chain") {
  Rng rng(72);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 3 + static_cast<Index>(rng.next_u64() % 6);
    const GvTangentParams p = random_gv(rng, n);
    const FdReport report = fd_check(gv_model(p), gv_param_set(p));
    CHECK(report.max_rel_error <= 1e-6);
  }
}

TEST_CASE("gv u-group descriptors equal the qs b-group form") {
  Rng rng(73);
  const GvTangentParams gp = random_gv(rng, 5);
  const auto [qsp, m] = gv_expand(gp);
  const auto gvd = gv_derivatives(gp);
  const auto qsd = qs_derivatives(qsp);
  // u-group offset in [t,u,d,v,w]: n-2; b-group offset in
  // [a,e,b,d,f,g,h]: (n-1)+(n-2).
  const Index n = 5;
  for (Index i = 0; i < n - 1; ++i) {
    const Matrix a = gvd[static_cast<size_t>(n - 2 + i)].to_dense();
    const Matrix b = qsd[static_cast<size_t>(2 * n - 3 + i)].to_dense();
    CHECK(max_norm(Matrix(a - b)) == 0.0);
  }
}

TEST_CASE("framework equivalence for the qs and gv kernels") {
  Rng rng(3030);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 3 + static_cast<Index>(rng.next_u64() % 10);
    if (trial % 2 == 0) {
      const QsParams p = random_qs(rng, n);
      const CnReport closed = qs_pinv_cn_upper(p);
      const CnReport engine = pinv_cn_upper(qs_model(p), qs_param_set(p));
      CHECK(rel_diff(closed.mixed, engine.mixed) <= 8 * kEps);
      CHECK(rel_diff(closed.componentwise, engine.componentwise) <= 8 * kEps);
      CHECK(max_norm(Matrix(closed.kernel - engine.kernel)) <=
            8 * kEps * max_norm(closed.kernel));

      const Vector b = rng.normal_vector(n);
      const CnReport lsc = qs_ls_cn_upper(p, b);
      const CnReport lse =
          ls_cn_upper(make_ls_problem(qs_model(p), qs_param_set(p), b));
      CHECK(rel_diff(lsc.mixed, lse.mixed) <= 8 * kEps);
      CHECK(rel_diff(lsc.componentwise, lse.componentwise) <= 8 * kEps);
    } else {
      const GvTangentParams p = trial % 3 == 0
                                    ? random_gv_rank_deficient(rng, n)
                                    : random_gv(rng, n);
      const CnReport closed = gv_pinv_cn_upper(p);
      const CnReport engine = pinv_cn_upper(gv_model(p), gv_param_set(p));
      CHECK(rel_diff(closed.mixed, engine.mixed) <= 8 * kEps);
      CHECK(rel_diff(closed.componentwise, engine.componentwise) <= 8 * kEps);

      const Vector b = rng.normal_vector(n);
      const CnReport lsc = gv_ls_cn_upper(p, b);
      const CnReport lse =
          ls_cn_upper(make_ls_problem(gv_model(p), gv_param_set(p), b));
      CHECK(rel_diff(lsc.mixed, lse.mixed) <= 8 * kEps);
      CHECK(rel_diff(lsc.componentwise, lse.componentwise) <= 8 * kEps);
    }
  }
}

TEST_CASE("rescaled representations build the same matrix") {
  Rng rng(88);
  const QsParams p = random_qs(rng, 5);
  const QsParams same = rescale_qs_representation(p, 1.0);
  CHECK(max_norm(Matrix(build_qs(same) - build_qs(p))) == 0.0);

  for (double tau : {2.0, 1e-3, 1e3}) {
    const QsParams scaled = rescale_qs_representation(p, tau);
    const Matrix m0 = build_qs(p);
    const Matrix m1 = build_qs(scaled);
    for (Index i = 0; i < 5; ++i) {
      for (Index j = 0; j < 5; ++j) {
        CHECK(std::abs(m1(i, j) - m0(i, j)) <=
              4 * kEps * std::abs(m0(i, j)));
      }
    }
  }
  CHECK_THROWS_AS(rescale_qs_representation(p, 0.0), InvalidArgumentError);
}

TEST_CASE("structured reports are representation independent") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 3 + static_cast<Index>(rng.next_u64() % 6);
    // Decimal rescaling wobbles entries by ~2 ulps, amplified by the
    // condition number, so the corpus keeps kappa moderate.
    const QsParams p = conditioned_qs(rng, n);
    const Vector b = rng.normal_vector(n);
    const CnReport base = qs_pinv_cn_upper(p);
    const CnReport base_ls = qs_ls_cn_upper(p, b);
    for (double tau : {1e-3, 1e3}) {
      const QsParams scaled = rescale_qs_representation(p, tau);
      const CnReport r = qs_pinv_cn_upper(scaled);
      CHECK(rel_diff(base.mixed, r.mixed) <= 1e-10);
      CHECK(rel_diff(base.componentwise, r.componentwise) <= 1e-10);
      const CnReport rls = qs_ls_cn_upper(scaled, b);
      CHECK(rel_diff(base_ls.mixed, rls.mixed) <= 1e-10);
      CHECK(rel_diff(base_ls.componentwise, rls.componentwise) <= 1e-10);
    }
  }
}

TEST_CASE("proved inequalities hold on random instances") {
  Rng rng(11011);
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 3 + static_cast<Index>(rng.next_u64() % 10);
    const GvTangentParams gp =
        trial % 2 == 0 ? random_gv(rng, n) : random_gv_rank_deficient(rng, n);
    const Vector b = rng.normal_vector(n);
    const QsCnComparison cmp = compare_all(gp, std::optional<Vector>(b));
    CHECK(cmp.verdicts.count("qs_le_n_unstr_mixed") == 1);
    CHECK(cmp.verdicts.count("gv_le_qs_mixed") == 1);
    CHECK(cmp.verdicts.count("eff_le_full_mixed") == 1);
    CHECK(cmp.verdicts.count("full_le_nm1_eff_mixed") == 1);
    CHECK(cmp.verdicts.count("eff_le_2unstr_mixed") == 1);
    for (const auto& [name, verdict] : cmp.verdicts) {
      INFO(name, ": lhs ", verdict.lhs, " rhs ", verdict.rhs);
      CHECK(verdict.pass);
    }
  }
}

TEST_CASE("effective kernels drop the per-index sums") {
  Rng rng(404);
  const QsParams p = random_qs(rng, 6);
  const CnReport eff = qs_effective_pinv_cn(p);
  const CnReport full = qs_pinv_cn_upper(p);
  CHECK(eff.mixed <= full.mixed * (1 + 1e-10));
  CHECK(full.mixed <= (6 - 1) * eff.mixed * (1 + 1e-10));
  const CnReport unstr = pinv_cn_unstructured(build_qs(p));
  CHECK(eff.mixed <= 2 * unstr.mixed * (1 + 1e-10));
  CHECK(eff.componentwise <= 2 * unstr.componentwise * (1 + 1e-10));
}

TEST_CASE("order-2 instances have empty inner sums") {
  QsParams p;
  p.a = Vector::Constant(1, 2.0);
  p.e = Vector(0);
  p.b = Vector::Constant(1, 3.0);
  p.d = Vector(2);
  p.d << 1.0, 4.0;
  p.f = Vector::Constant(1, 5.0);
  p.g = Vector(0);
  p.h = Vector::Constant(1, 7.0);
  const Matrix m = build_qs(p);
  CHECK(m(1, 0) == 6.0);
  CHECK(m(0, 1) == 35.0);
  CHECK(qs_derivatives(p).size() == 6);
  const CnReport full = qs_pinv_cn_upper(p);
  const CnReport eff = qs_effective_pinv_cn(p);
  // With no inner sums the full and effective kernels coincide.
  CHECK(rel_diff(full.mixed, eff.mixed) <= 8 * kEps);

  const CnReport engine = pinv_cn_upper(qs_model(p), qs_param_set(p));
  CHECK(rel_diff(full.mixed, engine.mixed) <= 8 * kEps);
}

TEST_CASE("nonsingular systems reduce to the inverse-based expression") {
  // With a nonsingular matrix the residual vanishes, so the bound equals
  // the direct expression in the matrix inverse.
  Rng rng(2468);
  const Index n = 5;
  const QsParams p = conditioned_qs(rng, n);
  const Vector b = rng.normal_vector(n);
  const CnReport bound = qs_ls_cn_upper(p, b);

  const Matrix m = build_qs(p);
  const CnWorkspace ws = make_workspace(m, {});
  REQUIRE(ws.bundle.rank == n);
  const Matrix& inv = ws.bundle.pinv;
  const Vector x = ld_prod(inv, b);
  const LduSplit ldu = split_ldu(m);
  const Matrix abs_inv = inv.cwiseAbs();
  const Vector abs_d = ldu.dm.diagonal().cwiseAbs();
  KernelAccum accum(n, 1);
  auto addv = [&accum](const Vector& t) { accum.add(Matrix(t)); };
  addv(ld_prod(abs_inv, Vector(b.cwiseAbs())));
  addv(ld_scaled_prod(abs_inv, abs_d, Vector(x.cwiseAbs())));
  addv(ld_prod(abs_inv, Vector(ld_prod(ldu.l, x).cwiseAbs())));
  addv(ld_prod(Matrix(ld_prod(inv, ldu.l).cwiseAbs()), Vector(x.cwiseAbs())));
  addv(ld_prod(abs_inv, Vector(ld_prod(ldu.um, x).cwiseAbs())));
  addv(ld_prod(Matrix(ld_prod(inv, ldu.um).cwiseAbs()), Vector(x.cwiseAbs())));
  for (Index i = 2; i <= n - 1; ++i) {
    const Matrix block = m.block(i, 0, n - i, i - 1);
    addv(ld_prod(Matrix(inv.middleCols(i, n - i)),
                 ld_prod(block, Vector(x.head(i - 1))))
             .cwiseAbs());
    const Matrix ublock = m.block(0, i, i - 1, n - i);
    addv(ld_prod(Matrix(inv.leftCols(i - 1)),
                 ld_prod(ublock, Vector(x.tail(n - i))))
             .cwiseAbs());
  }
  const double direct = inf_norm(Vector(accum.value().col(0))) / inf_norm(x);
  CHECK(rel_diff(bound.mixed, direct) <= 1e-9);
}

TEST_CASE("scaled-corner recipe keeps every verdict passing") {
  Rng rng(3579);
  for (Index n : {5, 7, 10}) {
    for (int k : {-2, -1, 0, 1, 2, 3}) {
      const QsParams p = scale_qs_corners(random_qs(rng, n), k);
      const Vector b = rng.normal_vector(n);
      const QsCnComparison cmp = compare_all(p, std::optional<Vector>(b));
      for (const auto& [name, verdict] : cmp.verdicts) {
        INFO("n=", n, " k=", k, " ", name);
        CHECK(verdict.pass);
      }
    }
  }
}

TEST_CASE("compare_all on a qs instance omits the tangent report") {
  Rng rng(606);
  const QsParams p = random_qs(rng, 4);
  const QsCnComparison cmp = compare_all(p);
  CHECK_FALSE(cmp.structured_gv.has_value());
  CHECK(cmp.verdicts.count("gv_le_qs_mixed") == 0);
  CHECK(cmp.verdicts.at("qs_le_n_unstr_mixed").pass);
}
