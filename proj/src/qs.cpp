#include "structcond/qs.hpp"

#include <cmath>

namespace structcond {

namespace {

void validate_qs(const QsParams& p) {
  const Index n = p.n();
  if (n < 2) throw InvalidArgumentError("qs: order must be at least 2");
  if (p.a.size() != n - 1 || p.b.size() != n - 1 || p.f.size() != n - 1 ||
      p.h.size() != n - 1 || p.e.size() != n - 2 || p.g.size() != n - 2) {
    throw InvalidArgumentError("qs: parameter group lengths do not match n");
  }
  require_finite(p.a, "qs a");
  require_finite(p.b, "qs b");
  require_finite(p.d, "qs d");
  require_finite(p.f, "qs f");
  require_finite(p.h, "qs h");
  if (n > 2) {
    require_finite(p.e, "qs e");
    require_finite(p.g, "qs g");
  }
}

void validate_gv(const GvTangentParams& p) {
  const Index n = p.n();
  if (n < 2) throw InvalidArgumentError("gv: order must be at least 2");
  if (p.u.size() != n - 1 || p.v.size() != n - 1 || p.t.size() != n - 2 ||
      p.w.size() != n - 2) {
    throw InvalidArgumentError("gv: parameter group lengths do not match n");
  }
  require_finite(p.t, "gv t");
  require_finite(p.u, "gv u");
  require_finite(p.d, "gv d");
  require_finite(p.v, "gv v");
  require_finite(p.w, "gv w");
}

// Parameter-group accessors with the generator indexing (see QsParams).
double qs_a(const QsParams& p, Index i) { return p.a(i - 2); }  // i = 2..n
double qs_e(const QsParams& p, Index i) { return p.e(i - 2); }  // i = 2..n-1
double qs_b(const QsParams& p, Index i) { return p.b(i - 1); }  // i = 1..n-1
double qs_f(const QsParams& p, Index i) { return p.f(i - 1); }  // i = 1..n-1
double qs_g(const QsParams& p, Index i) { return p.g(i - 2); }  // i = 2..n-1
double qs_h(const QsParams& p, Index i) { return p.h(i - 2); }  // i = 2..n

// Nonzero block of the e_i-derivative: M(i+1:n, 1:i-1), for i = 2..n-1.
Matrix lower_block(const Matrix& m, Index i) {
  const Index n = m.rows();
  return m.block(i, 0, n - i, i - 1);
}

// Nonzero block of the g_i-derivative: M(1:i-1, i+1:n).
Matrix upper_block(const Matrix& m, Index i) {
  const Index n = m.rows();
  return m.block(0, i, i - 1, n - i);
}

// Nonzero block of the t_i-derivative, rows i..n and columns 1..i-1:
// [-q_i^2 M(i, 1:i-1); p_i^2 M(i+1:n, 1:i-1)].
Matrix tangent_lower_block(const Matrix& m, Index i, double p_i, double q_i) {
  const Index n = m.rows();
  Matrix out(n - i + 1, i - 1);
  out.row(0) = (-(q_i * q_i)) * m.block(i - 1, 0, 1, i - 1);
  out.bottomRows(n - i) = (p_i * p_i) * m.block(i, 0, n - i, i - 1);
  return out;
}

// Nonzero block of the w_i-derivative, rows 1..i-1 and columns i..n:
// [-s_i^2 M(1:i-1, i) | r_i^2 M(1:i-1, i+1:n)].
Matrix tangent_upper_block(const Matrix& m, Index i, double r_i, double s_i) {
  const Index n = m.rows();
  Matrix out(i - 1, n - i + 1);
  out.col(0) = (-(s_i * s_i)) * m.block(0, i - 1, i - 1, 1);
  out.rightCols(n - i) = (r_i * r_i) * m.block(0, i, i - 1, n - i);
  return out;
}

Matrix embed(Index n, Index row0, Index col0, const Matrix& block) {
  Matrix out = Matrix::Zero(n, n);
  out.block(row0, col0, block.rows(), block.cols()) = block;
  return out;
}

Vector unit(Index n, Index i) {
  Vector v = Vector::Zero(n);
  v(i) = 1.0;
  return v;
}

// Shared per-instance state for the matrix-level kernel assemblies.
struct QsKernelState {
  CnWorkspace ws;
  Matrix m;
  LduSplit ldu;
  Matrix l_t, u_t;              // transposed triangles
  Matrix abs_pinv, abs_ppt, abs_ptp, abs_e, abs_f;
  Vector abs_d;
};

QsKernelState make_state(const Matrix& m, std::optional<double> rank_tol) {
  QsKernelState st;
  st.ws = make_workspace(m, rank_tol);
  st.m = m;
  st.ldu = split_ldu(m);
  st.l_t = st.ldu.l.transpose();
  st.u_t = st.ldu.um.transpose();
  st.abs_pinv = st.ws.bundle.pinv.cwiseAbs();
  st.abs_ppt = st.ws.pp_t.cwiseAbs();
  st.abs_ptp = st.ws.pt_p.cwiseAbs();
  st.abs_e = st.ws.bundle.proj_e.cwiseAbs();
  st.abs_f = st.ws.bundle.proj_f.cwiseAbs();
  st.abs_d = st.ldu.dm.diagonal().cwiseAbs();
  return st;
}

// The 15 matrix-level terms shared by the full and effective kernels:
// diagonal, row-type and column-type triangle contributions.
void add_effective_terms(KernelAccum& accum, const QsKernelState& st) {
  const PinvBundle& b = st.ws.bundle;
  accum.add(ld_scaled_prod(st.abs_pinv, st.abs_d, st.abs_pinv));
  accum.add(ld_scaled_prod(st.abs_ppt, st.abs_d, st.abs_e));
  accum.add(ld_scaled_prod(st.abs_f, st.abs_d, st.abs_ptp));

  accum.add(ld_prod(st.abs_pinv, Matrix(ld_prod(st.ldu.l, b.pinv).cwiseAbs())));
  accum.add(ld_prod(Matrix(ld_prod(st.ws.pp_t, st.l_t).cwiseAbs()), st.abs_e));
  accum.add(ld_prod(Matrix(ld_prod(b.proj_f, st.l_t).cwiseAbs()), st.abs_ptp));

  accum.add(ld_prod(Matrix(ld_prod(b.pinv, st.ldu.l).cwiseAbs()), st.abs_pinv));
  accum.add(ld_prod(st.abs_ppt, Matrix(ld_prod(st.l_t, b.proj_e).cwiseAbs())));
  accum.add(ld_prod(st.abs_f, Matrix(ld_prod(st.l_t, st.ws.pt_p).cwiseAbs())));

  accum.add(ld_prod(st.abs_pinv, Matrix(ld_prod(st.ldu.um, b.pinv).cwiseAbs())));
  accum.add(ld_prod(Matrix(ld_prod(st.ws.pp_t, st.u_t).cwiseAbs()), st.abs_e));
  accum.add(ld_prod(Matrix(ld_prod(b.proj_f, st.u_t).cwiseAbs()), st.abs_ptp));

  accum.add(ld_prod(Matrix(ld_prod(b.pinv, st.ldu.um).cwiseAbs()), st.abs_pinv));
  accum.add(ld_prod(st.abs_ppt, Matrix(ld_prod(st.u_t, b.proj_e).cwiseAbs())));
  accum.add(ld_prod(st.abs_f, Matrix(ld_prod(st.u_t, st.ws.pt_p).cwiseAbs())));
}

// Contribution of one block derivative placed at (row0, col0): the three
// pieces of the general kernel, multiplied out on the nonzero block only.
void add_block_terms(KernelAccum& accum, const QsKernelState& st, Index row0,
                     Index col0, const Matrix& block) {
  const PinvBundle& b = st.ws.bundle;
  const Index br = block.rows(), bc = block.cols();
  const Matrix block_t = block.transpose();
  accum.add(ld_prod(ld_prod(Matrix(b.pinv.middleCols(row0, br)), block),
                    Matrix(b.pinv.middleRows(col0, bc)))
                .cwiseAbs());
  accum.add(ld_prod(ld_prod(Matrix(st.ws.pp_t.middleCols(col0, bc)), block_t),
                    Matrix(b.proj_e.middleRows(row0, br)))
                .cwiseAbs());
  accum.add(ld_prod(ld_prod(Matrix(b.proj_f.middleCols(col0, bc)), block_t),
                    Matrix(st.ws.pt_p.middleRows(row0, br)))
                .cwiseAbs());
}

// Vector variants for the least-squares kernels.
struct QsLsState {
  Vector x, residual, ptx, b;
};

QsLsState make_ls_state(const QsKernelState& st, const Vector& b) {
  QsLsState ls;
  ls.x = ld_prod(st.ws.bundle.pinv, b);
  ls.residual = b - ld_prod(st.ws.bundle.m, ls.x);
  ls.ptx = ld_prod(Matrix(st.ws.bundle.pinv.transpose()), ls.x);
  ls.b = b;
  return ls;
}

void add_effective_ls_terms(KernelAccum& accum, const QsKernelState& st,
                            const QsLsState& ls) {
  const PinvBundle& b = st.ws.bundle;
  const Vector abs_x = ls.x.cwiseAbs();
  const Vector abs_r = ls.residual.cwiseAbs();
  const Vector abs_ptx = ls.ptx.cwiseAbs();
  auto addv = [&accum](const Vector& t) { accum.add(Matrix(t)); };

  addv(ld_scaled_prod(st.abs_pinv, st.abs_d, abs_x));
  addv(ld_scaled_prod(st.abs_ppt, st.abs_d, abs_r));
  addv(ld_scaled_prod(st.abs_f, st.abs_d, abs_ptx));

  addv(ld_prod(st.abs_pinv, Vector(ld_prod(st.ldu.l, ls.x).cwiseAbs())));
  addv(ld_prod(Matrix(ld_prod(st.ws.pp_t, st.l_t).cwiseAbs()), abs_r));
  addv(ld_prod(Matrix(ld_prod(b.proj_f, st.l_t).cwiseAbs()), abs_ptx));

  addv(ld_prod(Matrix(ld_prod(b.pinv, st.ldu.l).cwiseAbs()), abs_x));
  addv(ld_prod(st.abs_ppt, Vector(ld_prod(st.l_t, ls.residual).cwiseAbs())));
  addv(ld_prod(st.abs_f, Vector(ld_prod(st.l_t, ls.ptx).cwiseAbs())));

  addv(ld_prod(st.abs_pinv, Vector(ld_prod(st.ldu.um, ls.x).cwiseAbs())));
  addv(ld_prod(Matrix(ld_prod(st.ws.pp_t, st.u_t).cwiseAbs()), abs_r));
  addv(ld_prod(Matrix(ld_prod(b.proj_f, st.u_t).cwiseAbs()), abs_ptx));

  addv(ld_prod(Matrix(ld_prod(b.pinv, st.ldu.um).cwiseAbs()), abs_x));
  addv(ld_prod(st.abs_ppt, Vector(ld_prod(st.u_t, ls.residual).cwiseAbs())));
  addv(ld_prod(st.abs_f, Vector(ld_prod(st.u_t, ls.ptx).cwiseAbs())));

  addv(ld_prod(st.abs_pinv, Vector(ls.b.cwiseAbs())));
}

void add_block_ls_terms(KernelAccum& accum, const QsKernelState& st,
                        const QsLsState& ls, Index row0, Index col0,
                        const Matrix& block) {
  const PinvBundle& b = st.ws.bundle;
  const Index br = block.rows(), bc = block.cols();
  const Matrix block_t = block.transpose();
  auto addv = [&accum](const Vector& t) { accum.add(Matrix(t)); };
  addv(ld_prod(Matrix(b.pinv.middleCols(row0, br)),
               ld_prod(block, Vector(ls.x.segment(col0, bc))))
           .cwiseAbs());
  addv(ld_prod(Matrix(st.ws.pp_t.middleCols(col0, bc)),
               ld_prod(block_t, Vector(ls.residual.segment(row0, br))))
           .cwiseAbs());
  addv(ld_prod(Matrix(b.proj_f.middleCols(col0, bc)),
               ld_prod(block_t, Vector(ls.ptx.segment(row0, br))))
           .cwiseAbs());
}

}  // namespace

Vector QsParams::psi() const {
  Vector out(7 * n() - 8);
  Index at = 0;
  out.segment(at, a.size()) = a;
  at += a.size();
  out.segment(at, e.size()) = e;
  at += e.size();
  out.segment(at, b.size()) = b;
  at += b.size();
  out.segment(at, d.size()) = d;
  at += d.size();
  out.segment(at, f.size()) = f;
  at += f.size();
  out.segment(at, g.size()) = g;
  at += g.size();
  out.segment(at, h.size()) = h;
  return out;
}

Vector GvTangentParams::psi() const {
  Vector out(5 * n() - 6);
  Index at = 0;
  out.segment(at, t.size()) = t;
  at += t.size();
  out.segment(at, u.size()) = u;
  at += u.size();
  out.segment(at, d.size()) = d;
  at += d.size();
  out.segment(at, v.size()) = v;
  at += v.size();
  out.segment(at, w.size()) = w;
  return out;
}

Matrix build_qs(const QsParams& p) {
  validate_qs(p);
  const Index n = p.n();
  Matrix m(n, n);
  for (Index i = 1; i <= n; ++i) m(i - 1, i - 1) = p.d(i - 1);
  // Lower triangle: walk each column downward, extending the e-chain.
  for (Index j = 1; j <= n - 1; ++j) {
    double chain = qs_b(p, j);
    for (Index i = j + 1; i <= n; ++i) {
      m(i - 1, j - 1) = qs_a(p, i) * chain;
      if (i <= n - 1) chain *= qs_e(p, i);
    }
  }
  // Upper triangle: walk each row rightward, extending the g-chain.
  for (Index i = 1; i <= n - 1; ++i) {
    double chain = qs_f(p, i);
    for (Index j = i + 1; j <= n; ++j) {
      m(i - 1, j - 1) = chain * qs_h(p, j);
      if (j <= n - 1) chain *= qs_g(p, j);
    }
  }
  return m;
}

LduSplit split_ldu(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw InvalidArgumentError("split_ldu: matrix must be square");
  }
  LduSplit out;
  out.l = m.triangularView<Eigen::StrictlyLower>();
  out.um = m.triangularView<Eigen::StrictlyUpper>();
  out.dm = m.diagonal().asDiagonal();
  return out;
}

std::pair<Vector, Vector> cs_from_tangent(const Vector& t) {
  Vector p(t.size()), q(t.size());
  for (Index i = 0; i < t.size(); ++i) {
    const double hyp = std::hypot(1.0, t(i));
    p(i) = 1.0 / hyp;
    q(i) = t(i) / hyp;
  }
  return {p, q};
}

std::pair<QsParams, Matrix> gv_expand(const GvTangentParams& gp) {
  validate_gv(gp);
  const Index n = gp.n();
  const auto [pc, qc] = cs_from_tangent(gp.t);
  const auto [rc, sc] = cs_from_tangent(gp.w);
  QsParams qs;
  qs.a = Vector(n - 1);
  qs.a.head(n - 2) = pc;
  qs.a(n - 2) = 1.0;  // a_n
  qs.e = qc;
  qs.b = gp.u;
  qs.d = gp.d;
  qs.f = gp.v;
  qs.g = sc;
  qs.h = Vector(n - 1);
  qs.h.head(n - 2) = rc;
  qs.h(n - 2) = 1.0;  // h_n
  Matrix m = build_qs(qs);
  return {std::move(qs), std::move(m)};
}

std::vector<DerivDescriptor> qs_derivatives(const QsParams& p) {
  validate_qs(p);
  const Index n = p.n();
  const Matrix m = build_qs(p);
  const LduSplit ldu = split_ldu(m);

  std::vector<DerivDescriptor> out;
  out.reserve(static_cast<size_t>(7 * n - 8));
  for (Index i = 2; i <= n; ++i) {  // a_i . dM/da_i = e_i L_M(i,:)
    out.push_back(DerivDescriptor::rank_one(
        unit(n, i - 1), Vector(ldu.l.row(i - 1).transpose()), true));
  }
  for (Index i = 2; i <= n - 1; ++i) {  // e_i . dM/de_i = F_i
    out.push_back(DerivDescriptor::dense(
        embed(n, i, 0, lower_block(m, i)), true));
  }
  for (Index i = 1; i <= n - 1; ++i) {  // b_i . dM/db_i = L_M(:,i) e_i^T
    out.push_back(DerivDescriptor::rank_one(Vector(ldu.l.col(i - 1)),
                                            unit(n, i - 1), true));
  }
  for (Index i = 1; i <= n; ++i) {  // dM/dd_i = e_i e_i^T
    out.push_back(DerivDescriptor::rank_one(unit(n, i - 1), unit(n, i - 1)));
  }
  for (Index i = 1; i <= n - 1; ++i) {  // f_i . dM/df_i = e_i U_M(i,:)
    out.push_back(DerivDescriptor::rank_one(
        unit(n, i - 1), Vector(ldu.um.row(i - 1).transpose()), true));
  }
  for (Index i = 2; i <= n - 1; ++i) {  // g_i . dM/dg_i = G_i
    out.push_back(DerivDescriptor::dense(
        embed(n, 0, i, upper_block(m, i)), true));
  }
  for (Index i = 2; i <= n; ++i) {  // h_i . dM/dh_i = U_M(:,i) e_i^T
    out.push_back(DerivDescriptor::rank_one(Vector(ldu.um.col(i - 1)),
                                            unit(n, i - 1), true));
  }
  return out;
}

std::vector<DerivDescriptor> gv_derivatives(const GvTangentParams& gp) {
  validate_gv(gp);
  const Index n = gp.n();
  const auto [qs, m] = gv_expand(gp);
  const LduSplit ldu = split_ldu(m);
  const auto [pc, qc] = cs_from_tangent(gp.t);
  const auto [rc, sc] = cs_from_tangent(gp.w);

  std::vector<DerivDescriptor> out;
  out.reserve(static_cast<size_t>(5 * n - 6));
  for (Index i = 2; i <= n - 1; ++i) {  // t_i . dM/dt_i = K_i
    out.push_back(DerivDescriptor::dense(
        embed(n, i - 1, 0, tangent_lower_block(m, i, pc(i - 2), qc(i - 2))),
        true));
  }
  for (Index i = 1; i <= n - 1; ++i) {  // u_i: as the b-group
    out.push_back(DerivDescriptor::rank_one(Vector(ldu.l.col(i - 1)),
                                            unit(n, i - 1), true));
  }
  for (Index i = 1; i <= n; ++i) {  // d_i
    out.push_back(DerivDescriptor::rank_one(unit(n, i - 1), unit(n, i - 1)));
  }
  for (Index i = 1; i <= n - 1; ++i) {  // v_i: as the f-group
    out.push_back(DerivDescriptor::rank_one(
        unit(n, i - 1), Vector(ldu.um.row(i - 1).transpose()), true));
  }
  for (Index i = 2; i <= n - 1; ++i) {  // w_i . dM/dw_i = L_i
    out.push_back(DerivDescriptor::dense(
        embed(n, 0, i - 1, tangent_upper_block(m, i, rc(i - 2), sc(i - 2))),
        true));
  }
  return out;
}

MatrixModel qs_model(const QsParams& p) {
  validate_qs(p);
  const Index n = p.n();
  auto unpack = [n](const Vector& psi) {
    QsParams q;
    Index at = 0;
    q.a = psi.segment(at, n - 1);
    at += n - 1;
    q.e = psi.segment(at, n - 2);
    at += n - 2;
    q.b = psi.segment(at, n - 1);
    at += n - 1;
    q.d = psi.segment(at, n);
    at += n;
    q.f = psi.segment(at, n - 1);
    at += n - 1;
    q.g = psi.segment(at, n - 2);
    at += n - 2;
    q.h = psi.segment(at, n - 1);
    return q;
  };
  MatrixModel model;
  model.rows = n;
  model.cols = n;
  model.eval = [unpack](const Vector& psi) { return build_qs(unpack(psi)); };
  model.derivs = [unpack](const Vector& psi) {
    return qs_derivatives(unpack(psi));
  };
  model.domain_check = [](const Vector& psi) {
    DomainStatus s;
    if (!psi.allFinite()) {
      s.ok = false;
      s.reason = "non-finite parameters";
    }
    return s;
  };
  return model;
}

ParamSet qs_param_set(const QsParams& p) {
  ParamSet out;
  out.values = p.psi();
  const Index n = p.n();
  auto push = [&out](const char* name, Index lo, Index hi) {
    for (Index i = lo; i <= hi; ++i) {
      out.labels.push_back(std::string(name) + "[" + std::to_string(i) + "]");
    }
  };
  push("a", 2, n);
  push("e", 2, n - 1);
  push("b", 1, n - 1);
  push("d", 1, n);
  push("f", 1, n - 1);
  push("g", 2, n - 1);
  push("h", 2, n);
  return out;
}

MatrixModel gv_model(const GvTangentParams& p) {
  validate_gv(p);
  const Index n = p.n();
  auto unpack = [n](const Vector& psi) {
    GvTangentParams q;
    Index at = 0;
    q.t = psi.segment(at, n - 2);
    at += n - 2;
    q.u = psi.segment(at, n - 1);
    at += n - 1;
    q.d = psi.segment(at, n);
    at += n;
    q.v = psi.segment(at, n - 1);
    at += n - 1;
    q.w = psi.segment(at, n - 2);
    return q;
  };
  MatrixModel model;
  model.rows = n;
  model.cols = n;
  model.eval = [unpack](const Vector& psi) {
    return gv_expand(unpack(psi)).second;
  };
  model.derivs = [unpack](const Vector& psi) {
    return gv_derivatives(unpack(psi));
  };
  model.domain_check = [](const Vector& psi) {
    DomainStatus s;
    if (!psi.allFinite()) {
      s.ok = false;
      s.reason = "non-finite parameters";
    }
    return s;
  };
  return model;
}

ParamSet gv_param_set(const GvTangentParams& p) {
  ParamSet out;
  out.values = p.psi();
  const Index n = p.n();
  auto push = [&out](const char* name, Index lo, Index hi) {
    for (Index i = lo; i <= hi; ++i) {
      out.labels.push_back(std::string(name) + "[" + std::to_string(i) + "]");
    }
  };
  push("t", 2, n - 1);
  push("u", 1, n - 1);
  push("d", 1, n);
  push("v", 1, n - 1);
  push("w", 2, n - 1);
  return out;
}

CnReport qs_pinv_cn_upper(const QsParams& p, std::optional<double> rank_tol) {
  validate_qs(p);
  const Index n = p.n();
  QsKernelState st = make_state(build_qs(p), rank_tol);
  KernelAccum accum(n, n);
  add_effective_terms(accum, st);
  for (Index i = 2; i <= n - 1; ++i) {
    add_block_terms(accum, st, i, 0, lower_block(st.m, i));
  }
  for (Index i = 2; i <= n - 1; ++i) {
    add_block_terms(accum, st, 0, i, upper_block(st.m, i));
  }
  return report_from_pinv_kernel(st.ws, accum.value(), CnMode::upper_bound);
}

CnReport qs_ls_cn_upper(const QsParams& p, const Vector& b,
                        std::optional<double> rank_tol) {
  validate_qs(p);
  const Index n = p.n();
  if (b.size() != n) {
    throw InvalidArgumentError("right-hand side length does not match order");
  }
  require_finite(b, "right-hand side");
  QsKernelState st = make_state(build_qs(p), rank_tol);
  QsLsState ls = make_ls_state(st, b);
  KernelAccum accum(n, 1);
  add_effective_ls_terms(accum, st, ls);
  for (Index i = 2; i <= n - 1; ++i) {
    add_block_ls_terms(accum, st, ls, i, 0, lower_block(st.m, i));
  }
  for (Index i = 2; i <= n - 1; ++i) {
    add_block_ls_terms(accum, st, ls, 0, i, upper_block(st.m, i));
  }
  return report_from_ls_kernel(st.ws, Vector(accum.value().col(0)), ls.x,
                               CnMode::upper_bound);
}

namespace {

// Terms common to the tangent-representation kernels: diagonal terms plus
// the column-type lower and row-type upper triangle contributions.
void add_gv_base_terms(KernelAccum& accum, const QsKernelState& st) {
  const PinvBundle& b = st.ws.bundle;
  accum.add(ld_scaled_prod(st.abs_pinv, st.abs_d, st.abs_pinv));
  accum.add(ld_scaled_prod(st.abs_ppt, st.abs_d, st.abs_e));
  accum.add(ld_scaled_prod(st.abs_f, st.abs_d, st.abs_ptp));

  accum.add(ld_prod(Matrix(ld_prod(b.pinv, st.ldu.l).cwiseAbs()), st.abs_pinv));
  accum.add(ld_prod(st.abs_ppt, Matrix(ld_prod(st.l_t, b.proj_e).cwiseAbs())));
  accum.add(ld_prod(st.abs_f, Matrix(ld_prod(st.l_t, st.ws.pt_p).cwiseAbs())));

  accum.add(ld_prod(st.abs_pinv, Matrix(ld_prod(st.ldu.um, b.pinv).cwiseAbs())));
  accum.add(ld_prod(Matrix(ld_prod(st.ws.pp_t, st.u_t).cwiseAbs()), st.abs_e));
  accum.add(ld_prod(Matrix(ld_prod(b.proj_f, st.u_t).cwiseAbs()), st.abs_ptp));
}

void add_gv_base_ls_terms(KernelAccum& accum, const QsKernelState& st,
                          const QsLsState& ls) {
  const PinvBundle& b = st.ws.bundle;
  const Vector abs_x = ls.x.cwiseAbs();
  const Vector abs_r = ls.residual.cwiseAbs();
  const Vector abs_ptx = ls.ptx.cwiseAbs();
  auto addv = [&accum](const Vector& t) { accum.add(Matrix(t)); };

  addv(ld_scaled_prod(st.abs_pinv, st.abs_d, abs_x));
  addv(ld_scaled_prod(st.abs_ppt, st.abs_d, abs_r));
  addv(ld_scaled_prod(st.abs_f, st.abs_d, abs_ptx));

  addv(ld_prod(Matrix(ld_prod(b.pinv, st.ldu.l).cwiseAbs()), abs_x));
  addv(ld_prod(st.abs_ppt, Vector(ld_prod(st.l_t, ls.residual).cwiseAbs())));
  addv(ld_prod(st.abs_f, Vector(ld_prod(st.l_t, ls.ptx).cwiseAbs())));

  addv(ld_prod(st.abs_pinv, Vector(ld_prod(st.ldu.um, ls.x).cwiseAbs())));
  addv(ld_prod(Matrix(ld_prod(st.ws.pp_t, st.u_t).cwiseAbs()), abs_r));
  addv(ld_prod(Matrix(ld_prod(b.proj_f, st.u_t).cwiseAbs()), abs_ptx));

  addv(ld_prod(st.abs_pinv, Vector(ls.b.cwiseAbs())));
}

}  // namespace

CnReport gv_pinv_cn_upper(const GvTangentParams& gp,
                          std::optional<double> rank_tol) {
  validate_gv(gp);
  const Index n = gp.n();
  const auto [pc, qc] = cs_from_tangent(gp.t);
  const auto [rc, sc] = cs_from_tangent(gp.w);
  QsKernelState st = make_state(gv_expand(gp).second, rank_tol);
  KernelAccum accum(n, n);
  add_gv_base_terms(accum, st);
  for (Index i = 2; i <= n - 1; ++i) {
    add_block_terms(accum, st, i - 1, 0,
                    tangent_lower_block(st.m, i, pc(i - 2), qc(i - 2)));
  }
  for (Index i = 2; i <= n - 1; ++i) {
    add_block_terms(accum, st, 0, i - 1,
                    tangent_upper_block(st.m, i, rc(i - 2), sc(i - 2)));
  }
  return report_from_pinv_kernel(st.ws, accum.value(), CnMode::upper_bound);
}

CnReport gv_ls_cn_upper(const GvTangentParams& gp, const Vector& b,
                        std::optional<double> rank_tol) {
  validate_gv(gp);
  const Index n = gp.n();
  if (b.size() != n) {
    throw InvalidArgumentError("right-hand side length does not match order");
  }
  require_finite(b, "right-hand side");
  const auto [pc, qc] = cs_from_tangent(gp.t);
  const auto [rc, sc] = cs_from_tangent(gp.w);
  QsKernelState st = make_state(gv_expand(gp).second, rank_tol);
  QsLsState ls = make_ls_state(st, b);
  KernelAccum accum(n, 1);
  add_gv_base_ls_terms(accum, st, ls);
  for (Index i = 2; i <= n - 1; ++i) {
    add_block_ls_terms(accum, st, ls, i - 1, 0,
                       tangent_lower_block(st.m, i, pc(i - 2), qc(i - 2)));
  }
  for (Index i = 2; i <= n - 1; ++i) {
    add_block_ls_terms(accum, st, ls, 0, i - 1,
                       tangent_upper_block(st.m, i, rc(i - 2), sc(i - 2)));
  }
  return report_from_ls_kernel(st.ws, Vector(accum.value().col(0)), ls.x,
                               CnMode::upper_bound);
}

CnReport qs_effective_pinv_cn(const QsParams& p,
                              std::optional<double> rank_tol) {
  validate_qs(p);
  const Index n = p.n();
  QsKernelState st = make_state(build_qs(p), rank_tol);
  KernelAccum accum(n, n);
  add_effective_terms(accum, st);
  return report_from_pinv_kernel(st.ws, accum.value(), CnMode::upper_bound);
}

CnReport qs_effective_ls_cn(const QsParams& p, const Vector& b,
                            std::optional<double> rank_tol) {
  validate_qs(p);
  const Index n = p.n();
  if (b.size() != n) {
    throw InvalidArgumentError("right-hand side length does not match order");
  }
  require_finite(b, "right-hand side");
  QsKernelState st = make_state(build_qs(p), rank_tol);
  QsLsState ls = make_ls_state(st, b);
  KernelAccum accum(n, 1);
  add_effective_ls_terms(accum, st, ls);
  return report_from_ls_kernel(st.ws, Vector(accum.value().col(0)), ls.x,
                               CnMode::upper_bound);
}

QsParams rescale_qs_representation(const QsParams& p, double tau) {
  validate_qs(p);
  if (tau == 0.0 || !std::isfinite(tau)) {
    throw InvalidArgumentError("rescale factor must be nonzero and finite");
  }
  QsParams out = p;
  out.a = p.a / tau;
  out.b = p.b * tau;
  return out;
}

namespace {

void add_verdict(std::map<std::string, Verdict>& verdicts,
                 const std::string& name, double lhs, double rhs) {
  Verdict v;
  v.lhs = lhs;
  v.rhs = rhs;
  v.pass = lhs <= rhs * (1.0 + 1e-10);
  verdicts[name] = v;
}

void fill_verdicts(QsCnComparison& cmp) {
  const double nd = static_cast<double>(cmp.n);
  auto both = [&](const std::string& name, const CnReport& l,
                  const CnReport& r, double factor, const char* suffix) {
    add_verdict(cmp.verdicts, name + "_mixed" + suffix, l.mixed,
                factor * r.mixed);
    add_verdict(cmp.verdicts, name + "_comp" + suffix, l.componentwise,
                factor * r.componentwise);
  };
  both("qs_le_n_unstr", cmp.structured_qs, cmp.unstructured, nd, "");
  both("eff_le_full", cmp.effective, cmp.structured_qs, 1.0, "");
  both("full_le_nm1_eff", cmp.structured_qs, cmp.effective, nd - 1.0, "");
  both("eff_le_2unstr", cmp.effective, cmp.unstructured, 2.0, "");
  if (cmp.structured_gv) {
    both("gv_le_qs", *cmp.structured_gv, cmp.structured_qs, 1.0, "");
  }
  if (cmp.ls_structured_qs) {
    both("qs_le_n_unstr", *cmp.ls_structured_qs, *cmp.ls_unstructured, nd,
         "_ls");
    both("eff_le_full", *cmp.ls_effective, *cmp.ls_structured_qs, 1.0, "_ls");
    both("full_le_nm1_eff", *cmp.ls_structured_qs, *cmp.ls_effective,
         nd - 1.0, "_ls");
    both("eff_le_2unstr", *cmp.ls_effective, *cmp.ls_unstructured, 2.0, "_ls");
    if (cmp.ls_structured_gv) {
      both("gv_le_qs", *cmp.ls_structured_gv, *cmp.ls_structured_qs, 1.0,
           "_ls");
    }
  }
}

}  // namespace

QsCnComparison compare_all(const QsParams& p, const std::optional<Vector>& b,
                           std::optional<double> rank_tol) {
  validate_qs(p);
  QsCnComparison cmp;
  cmp.n = p.n();
  const Matrix m = build_qs(p);
  cmp.structured_qs = qs_pinv_cn_upper(p, rank_tol);
  cmp.effective = qs_effective_pinv_cn(p, rank_tol);
  cmp.unstructured = pinv_cn_unstructured(m, rank_tol);
  if (b) {
    cmp.ls_structured_qs = qs_ls_cn_upper(p, *b, rank_tol);
    cmp.ls_effective = qs_effective_ls_cn(p, *b, rank_tol);
    cmp.ls_unstructured = ls_cn_unstructured(m, *b, rank_tol);
  }
  fill_verdicts(cmp);
  return cmp;
}

QsCnComparison compare_all(const GvTangentParams& p,
                           const std::optional<Vector>& b,
                           std::optional<double> rank_tol) {
  validate_gv(p);
  const auto [qs, m] = gv_expand(p);
  QsCnComparison cmp;
  cmp.n = p.n();
  cmp.structured_qs = qs_pinv_cn_upper(qs, rank_tol);
  cmp.effective = qs_effective_pinv_cn(qs, rank_tol);
  cmp.unstructured = pinv_cn_unstructured(m, rank_tol);
  cmp.structured_gv = gv_pinv_cn_upper(p, rank_tol);
  if (b) {
    cmp.ls_structured_qs = qs_ls_cn_upper(qs, *b, rank_tol);
    cmp.ls_effective = qs_effective_ls_cn(qs, *b, rank_tol);
    cmp.ls_unstructured = ls_cn_unstructured(m, *b, rank_tol);
    cmp.ls_structured_gv = gv_ls_cn_upper(p, *b, rank_tol);
  }
  fill_verdicts(cmp);
  return cmp;
}

}  // namespace structcond
