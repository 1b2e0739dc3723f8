#include "structcond/cv.hpp"

#include <cmath>
#include <utility>

namespace structcond {

namespace {

void validate_shape(const CvParams& p) {
  if (p.m() < 1 || p.n < 1) {
    throw InvalidArgumentError("cv: need at least one row and one column");
  }
  if (p.l() > p.n) {
    throw InvalidArgumentError("cv: more pole nodes than columns");
  }
  require_finite(p.c, "cv nodes c");
  if (p.l() > 0) require_finite(p.d, "cv pole nodes d");
}

}  // namespace

Vector CvParams::psi() const {
  Vector out(c.size() + d.size());
  out.head(c.size()) = c;
  out.tail(d.size()) = d;
  return out;
}

CvValidation check_cv(const CvParams& p) {
  validate_shape(p);
  CvValidation v;
  for (Index i = 0; i < p.m(); ++i) {
    for (Index j = 0; j < p.l(); ++j) {
      const double scale = std::max({std::abs(p.c(i)), std::abs(p.d(j)), 1.0});
      const double gap = std::abs(p.c(i) - p.d(j)) / scale;
      if (p.c(i) == p.d(j)) {
        v.collisions.push_back({i, j, gap});
      } else if (gap < 1e-12) {
        v.near_collisions.push_back({i, j, gap});
      }
    }
  }
  if (p.n - p.l() - 1 >= 1) {
    for (Index i = 0; i < p.m(); ++i) {
      if (p.c(i) == 0.0) v.zero_node_with_powers = true;
    }
  }
  return v;
}

Matrix build_cv(const CvParams& p) {
  const CvValidation v = check_cv(p);
  if (!v.collisions.empty()) {
    const auto& f = v.collisions.front();
    throw NodeCollisionError(f.i, f.j, p.c(f.i));
  }
  const Index m = p.m(), l = p.l(), n = p.n;
  Matrix out(m, n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < l; ++j) out(i, j) = 1.0 / (p.c(i) - p.d(j));
    double power = 1.0;
    for (Index j = l; j < n; ++j) {
      out(i, j) = power;
      power *= p.c(i);
    }
  }
  return out;
}

CvAux cv_aux(const CvParams& p) {
  const CvValidation v = check_cv(p);
  if (!v.collisions.empty()) {
    const auto& f = v.collisions.front();
    throw NodeCollisionError(f.i, f.j, p.c(f.i));
  }
  if (v.zero_node_with_powers) {
    throw DomainError(
        "cv derivatives need nonzero nodes when the polynomial block has "
        "degree >= 1");
  }
  const Index m = p.m(), l = p.l(), n = p.n;
  const Matrix mat = build_cv(p);

  CvAux aux;
  aux.m1 = Matrix::Zero(m, n);
  aux.m2 = Matrix::Zero(m, n);
  if (l > 0) {
    aux.m1.leftCols(l) = -mat.leftCols(l);
    aux.m2.leftCols(l) = mat.leftCols(l);
  }
  if (n - l - 1 >= 1) {
    aux.m1.rightCols(n - l - 1) = mat.rightCols(n - l - 1);
  }

  aux.q = Matrix::Zero(m, n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < l; ++j) aux.q(i, j) = 1.0 / (p.c(i) - p.d(j));
    if (l < n) aux.q(i, l) = 1.0;
    for (Index k = 1; k <= n - l - 1; ++k) {
      aux.q(i, l + k) = static_cast<double>(k) / p.c(i);
    }
  }

  aux.d_ext = Vector::Zero(n);
  if (l > 0) aux.d_ext.head(l) = p.d;
  return aux;
}

std::vector<DerivDescriptor> cv_derivatives(const CvParams& p) {
  const CvAux aux = cv_aux(p);
  const Matrix g = hadamard(aux.m1, aux.q);
  const Matrix s = hadamard(aux.m2, aux.m2);
  const Index m = p.m(), l = p.l(), n = p.n;

  std::vector<DerivDescriptor> out;
  out.reserve(static_cast<size_t>(m + l));
  for (Index i = 0; i < m; ++i) {
    Vector u = Vector::Zero(m);
    u(i) = 1.0;
    out.push_back(DerivDescriptor::rank_one(std::move(u),
                                            Vector(g.row(i).transpose())));
  }
  for (Index j = 0; j < l; ++j) {
    Vector v = Vector::Zero(n);
    v(j) = 1.0;
    out.push_back(DerivDescriptor::rank_one(Vector(s.col(j)), std::move(v)));
  }
  return out;
}

MatrixModel cv_model(const CvParams& p) {
  validate_shape(p);
  const Index m = p.m(), l = p.l(), n = p.n;
  auto unpack = [m, l, n](const Vector& psi) {
    CvParams q;
    q.c = psi.head(m);
    q.d = psi.tail(l);
    q.n = n;
    return q;
  };
  MatrixModel model;
  model.rows = m;
  model.cols = n;
  model.eval = [unpack](const Vector& psi) { return build_cv(unpack(psi)); };
  model.derivs = [unpack](const Vector& psi) {
    return cv_derivatives(unpack(psi));
  };
  model.domain_check = [unpack](const Vector& psi) {
    DomainStatus s;
    if (!psi.allFinite()) {
      s.ok = false;
      s.reason = "non-finite parameters";
      return s;
    }
    const CvValidation v = check_cv(unpack(psi));
    if (!v.collisions.empty()) {
      s.ok = false;
      s.reason = "node collision c_i == d_j";
    } else if (v.zero_node_with_powers) {
      s.ok = false;
      s.reason = "zero node with polynomial block of degree >= 1";
    }
    return s;
  };
  return model;
}

ParamSet cv_param_set(const CvParams& p) {
  ParamSet out;
  out.values = p.psi();
  for (Index i = 0; i < p.m(); ++i) {
    out.labels.push_back("c[" + std::to_string(i + 1) + "]");
  }
  for (Index j = 0; j < p.l(); ++j) {
    out.labels.push_back("d[" + std::to_string(j + 1) + "]");
  }
  return out;
}

CnReport cv_pinv_cn_upper(const CvParams& p, std::optional<double> rank_tol) {
  const CvAux aux = cv_aux(p);
  const Matrix g = hadamard(aux.m1, aux.q);
  const Matrix s = hadamard(aux.m2, aux.m2);
  CnWorkspace ws = make_workspace(build_cv(p), rank_tol);
  const PinvBundle& b = ws.bundle;

  const Matrix abs_pinv = b.pinv.cwiseAbs();
  const Vector abs_c = p.c.cwiseAbs();
  const Vector abs_d = aux.d_ext.cwiseAbs();
  const Matrix g_t = g.transpose();
  const Matrix s_t = s.transpose();

  KernelAccum accum(p.n, p.m());
  accum.add(ld_scaled_prod(abs_pinv, abs_c,
                           Matrix(ld_prod(g, b.pinv).cwiseAbs())));
  accum.add(ld_scaled_prod(Matrix(ld_prod(ws.pp_t, g_t).cwiseAbs()), abs_c,
                           Matrix(b.proj_e.cwiseAbs())));
  accum.add(ld_scaled_prod(Matrix(ld_prod(b.proj_f, g_t).cwiseAbs()), abs_c,
                           Matrix(ws.pt_p.cwiseAbs())));
  accum.add(ld_scaled_prod(Matrix(ld_prod(b.pinv, s).cwiseAbs()), abs_d,
                           abs_pinv));
  accum.add(ld_scaled_prod(Matrix(ws.pp_t.cwiseAbs()), abs_d,
                           Matrix(ld_prod(s_t, b.proj_e).cwiseAbs())));
  accum.add(ld_scaled_prod(Matrix(b.proj_f.cwiseAbs()), abs_d,
                           Matrix(ld_prod(s_t, ws.pt_p).cwiseAbs())));
  return report_from_pinv_kernel(ws, accum.value(), CnMode::upper_bound);
}

CnReport cv_pinv_cn_exact_fullrank(const CvParams& p,
                                   std::optional<double> rank_tol) {
  CnWorkspace ws = make_workspace(build_cv(p), rank_tol);
  if (ws.bundle.rank < p.n) {
    throw NotFullColumnRankError(ws.bundle.rank, p.n);
  }
  Matrix kernel = pinv_exact_kernel(ws, cv_derivatives(p), p.psi());
  return report_from_pinv_kernel(ws, std::move(kernel),
                                 CnMode::exact_full_rank);
}

CnReport cv_ls_cn_upper(const CvParams& p, const Vector& b,
                        std::optional<double> rank_tol) {
  require_finite(b, "right-hand side");
  if (b.size() != p.m()) {
    throw InvalidArgumentError("right-hand side length does not match rows");
  }
  const CvAux aux = cv_aux(p);
  const Matrix g = hadamard(aux.m1, aux.q);
  const Matrix s = hadamard(aux.m2, aux.m2);
  CnWorkspace ws = make_workspace(build_cv(p), rank_tol);
  const PinvBundle& bd = ws.bundle;

  const Vector x = ld_prod(bd.pinv, b);
  const Vector residual = b - ld_prod(bd.m, x);
  const Vector ptx = ld_prod(Matrix(bd.pinv.transpose()), x);

  const Matrix abs_pinv = bd.pinv.cwiseAbs();
  const Vector abs_c = p.c.cwiseAbs();
  const Vector abs_d = aux.d_ext.cwiseAbs();
  const Matrix g_t = g.transpose();
  const Matrix s_t = s.transpose();

  KernelAccum accum(p.n, 1);
  auto addv = [&accum](const Vector& t) { accum.add(Matrix(t)); };
  addv(ld_prod(abs_pinv, Vector(b.cwiseAbs())));
  addv(ld_scaled_prod(abs_pinv, abs_c, Vector(ld_prod(g, x).cwiseAbs())));
  addv(ld_scaled_prod(Matrix(ld_prod(ws.pp_t, g_t).cwiseAbs()), abs_c,
                      Vector(residual.cwiseAbs())));
  addv(ld_scaled_prod(Matrix(ld_prod(bd.proj_f, g_t).cwiseAbs()), abs_c,
                      Vector(ptx.cwiseAbs())));
  addv(ld_scaled_prod(Matrix(ld_prod(bd.pinv, s).cwiseAbs()), abs_d,
                      Vector(x.cwiseAbs())));
  addv(ld_scaled_prod(Matrix(ws.pp_t.cwiseAbs()), abs_d,
                      Vector(ld_prod(s_t, residual).cwiseAbs())));
  addv(ld_scaled_prod(Matrix(bd.proj_f.cwiseAbs()), abs_d,
                      Vector(ld_prod(s_t, ptx).cwiseAbs())));
  return report_from_ls_kernel(ws, Vector(accum.value().col(0)), x,
                               CnMode::upper_bound);
}

CnReport cv_ls_cn_exact_fullrank(const CvParams& p, const Vector& b,
                                 std::optional<double> rank_tol) {
  require_finite(b, "right-hand side");
  if (b.size() != p.m()) {
    throw InvalidArgumentError("right-hand side length does not match rows");
  }
  CnWorkspace ws = make_workspace(build_cv(p), rank_tol);
  if (ws.bundle.rank < p.n) {
    throw NotFullColumnRankError(ws.bundle.rank, p.n);
  }
  const Vector x = ld_prod(ws.bundle.pinv, b);
  const Vector residual = b - ld_prod(ws.bundle.m, x);
  Vector kernel =
      ls_exact_kernel(ws, cv_derivatives(p), p.psi(), b, x, residual);
  return report_from_ls_kernel(ws, std::move(kernel), x,
                               CnMode::exact_full_rank);
}

}  // namespace structcond
