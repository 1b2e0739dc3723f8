#include "structcond/cn_engine.hpp"

#include <cmath>
#include <utility>

namespace structcond {

// --- param_model ------------------------------------------------------------

ParamSet make_param_set(Vector values, std::string prefix) {
  require_finite(values, "parameter values");
  if (values.size() < 1) {
    throw InvalidArgumentError("parameter set must be non-empty");
  }
  ParamSet out;
  out.values = std::move(values);
  out.labels.reserve(out.values.size());
  for (Index k = 0; k < out.values.size(); ++k) {
    out.labels.push_back(prefix + "[" + std::to_string(k + 1) + "]");
  }
  return out;
}

DerivDescriptor DerivDescriptor::dense(Matrix d, bool scaled) {
  DerivDescriptor out;
  out.payload = std::move(d);
  out.scaled_by_param = scaled;
  return out;
}

DerivDescriptor DerivDescriptor::rank_one(Vector u, Vector v, bool scaled) {
  DerivDescriptor out;
  out.payload = RankOne{std::move(u), std::move(v)};
  out.scaled_by_param = scaled;
  return out;
}

Matrix DerivDescriptor::to_dense() const {
  if (auto* d = std::get_if<Matrix>(&payload)) return *d;
  const auto& r = std::get<RankOne>(payload);
  return r.u * r.v.transpose();
}

Matrix DerivDescriptor::unscaled_dense(double psi_k) const {
  if (!scaled_by_param) return to_dense();
  if (psi_k == 0.0) {
    throw InvalidArgumentError(
        "cannot unscale a parameter-scaled derivative at a zero parameter");
  }
  return to_dense() / psi_k;
}

MatrixModel entrywise_model(const Matrix& m) {
  require_finite(m, "entrywise model matrix");
  const Index rows = m.rows(), cols = m.cols();
  MatrixModel model;
  model.rows = rows;
  model.cols = cols;
  model.eval = [rows, cols](const Vector& psi) {
    if (psi.size() != rows * cols) {
      throw InvalidArgumentError("entrywise model: wrong parameter count");
    }
    Matrix out(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) out(i, j) = psi(i * cols + j);
    }
    return out;
  };
  model.derivs = [rows, cols](const Vector& psi) {
    if (psi.size() != rows * cols) {
      throw InvalidArgumentError("entrywise model: wrong parameter count");
    }
    std::vector<DerivDescriptor> out;
    out.reserve(static_cast<size_t>(rows * cols));
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) {
        Vector u = Vector::Zero(rows);
        Vector v = Vector::Zero(cols);
        u(i) = 1.0;
        v(j) = 1.0;
        out.push_back(DerivDescriptor::rank_one(std::move(u), std::move(v)));
      }
    }
    return out;
  };
  model.domain_check = [](const Vector& psi) {
    DomainStatus s;
    if (!psi.allFinite()) {
      s.ok = false;
      s.reason = "non-finite entries";
    }
    return s;
  };
  return model;
}

ParamSet entrywise_params(const Matrix& m) {
  Vector psi(m.rows() * m.cols());
  ParamSet out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      psi(i * m.cols() + j) = m(i, j);
      out.labels.push_back("m(" + std::to_string(i + 1) + "," +
                           std::to_string(j + 1) + ")");
    }
  }
  out.values = std::move(psi);
  return out;
}

// --- engine -----------------------------------------------------------------

const char* to_string(CnMode mode) {
  switch (mode) {
    case CnMode::upper_bound: return "upper_bound";
    case CnMode::exact_full_rank: return "exact_full_rank";
    case CnMode::unstructured: return "unstructured";
    case CnMode::range_restricted: return "range_restricted";
  }
  return "unknown";
}

namespace {

// Extended-precision accumulator for nonnegative vector terms.
class VecAccum {
 public:
  explicit VecAccum(Index n) { acc_.setZero(n); }
  void add(const Vector& t, double weight = 1.0) {
    if (weight == 0.0) return;
    for (Index i = 0; i < t.size(); ++i) {
      acc_(i) += static_cast<long double>(t(i)) * weight;
    }
  }
  Vector value() const { return acc_.cast<double>(); }

 private:
  Eigen::Matrix<long double, Eigen::Dynamic, 1> acc_;
};

struct EvalContext {
  Matrix m;
  std::vector<DerivDescriptor> derivs;
};

EvalContext evaluate_model(const MatrixModel& model, const ParamSet& psi) {
  const DomainStatus st = model.check(psi.values);
  if (!st.ok) {
    throw DomainError("parameter vector outside model domain: " + st.reason);
  }
  EvalContext ctx;
  ctx.m = model.eval(psi.values);
  require_finite(ctx.m, "model evaluation");
  if (ctx.m.rows() != model.rows || ctx.m.cols() != model.cols) {
    throw InvalidArgumentError("model evaluation has unexpected shape");
  }
  ctx.derivs = model.derivs(psi.values);
  if (static_cast<Index>(ctx.derivs.size()) != psi.size()) {
    throw InvalidArgumentError("derivative list does not match parameter count");
  }
  return ctx;
}

void check_descriptor_shape(const DerivDescriptor& d, Index rows, Index cols) {
  if (d.is_rank_one()) {
    const auto& r = std::get<DerivDescriptor::RankOne>(d.payload);
    if (r.u.size() != rows || r.v.size() != cols) {
      throw InvalidArgumentError("rank-one descriptor has wrong lengths");
    }
  } else {
    const auto& m = std::get<Matrix>(d.payload);
    if (m.rows() != rows || m.cols() != cols) {
      throw InvalidArgumentError("dense descriptor has wrong shape");
    }
  }
}

void require_nonzero_pinv(const CnWorkspace& ws) {
  if (max_norm(ws.bundle.pinv) == 0.0) {
    throw DegenerateInputError(
        "zero matrix: the mixed condition number denominator vanishes");
  }
}

}  // namespace

CnWorkspace make_workspace(PinvBundle bundle) {
  CnWorkspace ws;
  ws.pp_t = ld_prod(bundle.pinv, Matrix(bundle.pinv.transpose()));
  ws.pt_p = ld_prod(Matrix(bundle.pinv.transpose()), bundle.pinv);
  ws.bundle = std::move(bundle);
  return ws;
}

CnWorkspace make_workspace(const Matrix& m, std::optional<double> rank_tol) {
  return make_workspace(pinv(m, rank_tol));
}

LsProblem make_ls_problem(MatrixModel model, ParamSet psi, Vector b,
                          std::optional<double> rank_tol) {
  require_finite(b, "right-hand side");
  if (b.size() != model.rows) {
    throw InvalidArgumentError("right-hand side length does not match rows");
  }
  const DomainStatus st = model.check(psi.values);
  if (!st.ok) {
    throw DomainError("parameter vector outside model domain: " + st.reason);
  }
  LsProblem p;
  p.ws = make_workspace(model.eval(psi.values), rank_tol);
  p.model = std::move(model);
  p.psi = std::move(psi);
  p.x = ld_prod(p.ws.bundle.pinv, b);
  p.residual = b - ld_prod(p.ws.bundle.m, p.x);
  p.b = std::move(b);
  return p;
}

Matrix pinv_upper_kernel(const CnWorkspace& ws,
                         const std::vector<DerivDescriptor>& derivs,
                         const Vector& psi) {
  const PinvBundle& b = ws.bundle;
  const Matrix pinv_t = b.pinv.transpose();
  const Matrix e_t = b.proj_e.transpose();
  KernelAccum accum(b.m.cols(), b.m.rows());
  for (Index k = 0; k < static_cast<Index>(derivs.size()); ++k) {
    const DerivDescriptor& d = derivs[static_cast<size_t>(k)];
    check_descriptor_shape(d, b.m.rows(), b.m.cols());
    const double w = d.scaled_by_param ? 1.0 : std::abs(psi(k));
    if (w == 0.0) continue;
    if (d.is_rank_one()) {
      const auto& r = std::get<DerivDescriptor::RankOne>(d.payload);
      accum.add_outer(ld_prod(b.pinv, r.u).cwiseAbs(),
                      ld_prod(pinv_t, r.v).cwiseAbs(), w);
      accum.add_outer(ld_prod(ws.pp_t, r.v).cwiseAbs(),
                      ld_prod(e_t, r.u).cwiseAbs(), w);
      accum.add_outer(ld_prod(b.proj_f, r.v).cwiseAbs(),
                      ld_prod(ws.pt_p, r.u).cwiseAbs(), w);
    } else {
      const Matrix& dm = std::get<Matrix>(d.payload);
      const Matrix dm_t = dm.transpose();
      accum.add(ld_prod(ld_prod(b.pinv, dm), b.pinv).cwiseAbs(), w);
      accum.add(ld_prod(ld_prod(ws.pp_t, dm_t), b.proj_e).cwiseAbs(), w);
      accum.add(ld_prod(ld_prod(b.proj_f, dm_t), ws.pt_p).cwiseAbs(), w);
    }
  }
  return accum.value();
}

Matrix pinv_exact_kernel(const CnWorkspace& ws,
                         const std::vector<DerivDescriptor>& derivs,
                         const Vector& psi) {
  const PinvBundle& b = ws.bundle;
  const Matrix pinv_t = b.pinv.transpose();
  const Matrix e_t = b.proj_e.transpose();
  KernelAccum accum(b.m.cols(), b.m.rows());
  for (Index k = 0; k < static_cast<Index>(derivs.size()); ++k) {
    const DerivDescriptor& d = derivs[static_cast<size_t>(k)];
    check_descriptor_shape(d, b.m.rows(), b.m.cols());
    const double w = d.scaled_by_param ? 1.0 : std::abs(psi(k));
    if (w == 0.0) continue;
    Matrix mk;
    if (d.is_rank_one()) {
      const auto& r = std::get<DerivDescriptor::RankOne>(d.payload);
      // (M†M)⁻¹ == M† M†ᵀ for full column rank, taken from the SVD bundle.
      const Matrix p1 = ld_prod(b.pinv, r.u) * ld_prod(pinv_t, r.v).transpose();
      const Matrix p2 = ld_prod(ws.pp_t, r.v) * ld_prod(e_t, r.u).transpose();
      mk = p1 - p2;
    } else {
      const Matrix& dm = std::get<Matrix>(d.payload);
      const Matrix dm_t = dm.transpose();
      mk = ld_prod(ld_prod(b.pinv, dm), b.pinv) -
           ld_prod(ld_prod(ws.pp_t, dm_t), b.proj_e);
    }
    accum.add(mk.cwiseAbs(), w);
  }
  return accum.value();
}

Vector ls_upper_kernel(const CnWorkspace& ws,
                       const std::vector<DerivDescriptor>& derivs,
                       const Vector& psi, const Vector& b, const Vector& x,
                       const Vector& residual) {
  const PinvBundle& bd = ws.bundle;
  const Matrix pinv_t = bd.pinv.transpose();
  const Vector ptx = ld_prod(pinv_t, x);  // M†ᵀ x
  VecAccum accum(bd.m.cols());
  for (Index k = 0; k < static_cast<Index>(derivs.size()); ++k) {
    const DerivDescriptor& d = derivs[static_cast<size_t>(k)];
    check_descriptor_shape(d, bd.m.rows(), bd.m.cols());
    const double w = d.scaled_by_param ? 1.0 : std::abs(psi(k));
    if (w == 0.0) continue;
    if (d.is_rank_one()) {
      const auto& r = std::get<DerivDescriptor::RankOne>(d.payload);
      accum.add(ld_prod(bd.pinv, r.u).cwiseAbs(),
                std::abs(ld_dot(r.v, x)) * w);
      accum.add(ld_prod(ws.pp_t, r.v).cwiseAbs(),
                std::abs(ld_dot(r.u, residual)) * w);
      accum.add(ld_prod(bd.proj_f, r.v).cwiseAbs(),
                std::abs(ld_dot(r.u, ptx)) * w);
    } else {
      const Matrix& dm = std::get<Matrix>(d.payload);
      const Matrix dm_t = dm.transpose();
      accum.add(ld_prod(bd.pinv, ld_prod(dm, x)).cwiseAbs(), w);
      accum.add(ld_prod(ws.pp_t, ld_prod(dm_t, residual)).cwiseAbs(), w);
      accum.add(ld_prod(bd.proj_f, ld_prod(dm_t, ptx)).cwiseAbs(), w);
    }
  }
  accum.add(ld_prod(Matrix(bd.pinv.cwiseAbs()), Vector(b.cwiseAbs())));
  return accum.value();
}

Vector ls_exact_kernel(const CnWorkspace& ws,
                       const std::vector<DerivDescriptor>& derivs,
                       const Vector& psi, const Vector& b, const Vector& x,
                       const Vector& residual) {
  const PinvBundle& bd = ws.bundle;
  VecAccum accum(bd.m.cols());
  for (Index k = 0; k < static_cast<Index>(derivs.size()); ++k) {
    const DerivDescriptor& d = derivs[static_cast<size_t>(k)];
    check_descriptor_shape(d, bd.m.rows(), bd.m.cols());
    const double w = d.scaled_by_param ? 1.0 : std::abs(psi(k));
    if (w == 0.0) continue;
    Vector vk;
    if (d.is_rank_one()) {
      const auto& r = std::get<DerivDescriptor::RankOne>(d.payload);
      vk = ld_prod(bd.pinv, r.u) * ld_dot(r.v, x) -
           ld_prod(ws.pp_t, r.v) * ld_dot(r.u, residual);
    } else {
      const Matrix& dm = std::get<Matrix>(d.payload);
      const Matrix dm_t = dm.transpose();
      vk = ld_prod(bd.pinv, ld_prod(dm, x)) -
           ld_prod(ws.pp_t, ld_prod(dm_t, residual));
    }
    accum.add(vk.cwiseAbs(), w);
  }
  accum.add(ld_prod(Matrix(bd.pinv.cwiseAbs()), Vector(b.cwiseAbs())));
  return accum.value();
}

CnReport report_from_pinv_kernel(const CnWorkspace& ws, Matrix kernel,
                                 CnMode mode) {
  require_nonzero_pinv(ws);
  CnReport out;
  out.mixed = max_norm(kernel) / max_norm(ws.bundle.pinv);
  out.componentwise = max_norm(pseudo_divide(kernel, ws.bundle.pinv));
  out.kernel = std::move(kernel);
  out.rank = ws.bundle.rank;
  out.mode = mode;
  return out;
}

CnReport report_from_ls_kernel(const CnWorkspace& ws, Vector kernel,
                               const Vector& x, CnMode mode) {
  if (inf_norm(x) == 0.0) {
    throw DegenerateInputError(
        "zero minimum-norm solution: the mixed condition number denominator "
        "vanishes");
  }
  CnReport out;
  out.mixed = inf_norm(kernel) / inf_norm(x);
  out.componentwise = inf_norm(pseudo_divide(kernel, x));
  out.kernel = kernel;
  out.rank = ws.bundle.rank;
  out.mode = mode;
  return out;
}

CnReport pinv_cn_upper(const MatrixModel& model, const ParamSet& psi,
                       std::optional<double> rank_tol) {
  EvalContext ctx = evaluate_model(model, psi);
  CnWorkspace ws = make_workspace(ctx.m, rank_tol);
  Matrix kernel = pinv_upper_kernel(ws, ctx.derivs, psi.values);
  return report_from_pinv_kernel(ws, std::move(kernel), CnMode::upper_bound);
}

CnReport pinv_cn_exact_fullrank(const MatrixModel& model, const ParamSet& psi,
                                std::optional<double> rank_tol) {
  EvalContext ctx = evaluate_model(model, psi);
  CnWorkspace ws = make_workspace(ctx.m, rank_tol);
  if (ws.bundle.rank < ctx.m.cols()) {
    throw NotFullColumnRankError(ws.bundle.rank, ctx.m.cols());
  }
  Matrix kernel = pinv_exact_kernel(ws, ctx.derivs, psi.values);
  return report_from_pinv_kernel(ws, std::move(kernel),
                                 CnMode::exact_full_rank);
}

CnReport pinv_cn_unstructured(const Matrix& m,
                              std::optional<double> rank_tol) {
  require_finite(m, "matrix");
  CnWorkspace ws = make_workspace(m, rank_tol);
  require_nonzero_pinv(ws);
  const Matrix abs_pinv = ws.bundle.pinv.cwiseAbs();
  const Matrix abs_m = m.cwiseAbs();
  const Matrix abs_m_t = m.transpose().cwiseAbs();
  KernelAccum accum(m.cols(), m.rows());
  accum.add(ld_prod(ld_prod(abs_pinv, abs_m), abs_pinv));
  accum.add(ld_prod(ld_prod(Matrix(ws.pp_t.cwiseAbs()), abs_m_t),
                    Matrix(ws.bundle.proj_e.cwiseAbs())));
  accum.add(ld_prod(ld_prod(Matrix(ws.bundle.proj_f.cwiseAbs()), abs_m_t),
                    Matrix(ws.pt_p.cwiseAbs())));
  return report_from_pinv_kernel(ws, accum.value(), CnMode::unstructured);
}

CnReport pinv_cn_range_restricted(const MatrixModel& model,
                                  const ParamSet& psi,
                                  std::optional<double> rank_tol) {
  EvalContext ctx = evaluate_model(model, psi);
  CnWorkspace ws = make_workspace(ctx.m, rank_tol);
  const PinvBundle& b = ws.bundle;
  const Matrix pinv_t = b.pinv.transpose();
  KernelAccum accum(b.m.cols(), b.m.rows());
  for (Index k = 0; k < static_cast<Index>(ctx.derivs.size()); ++k) {
    const DerivDescriptor& d = ctx.derivs[static_cast<size_t>(k)];
    check_descriptor_shape(d, b.m.rows(), b.m.cols());
    const double w = d.scaled_by_param ? 1.0 : std::abs(psi.values(k));
    if (w == 0.0) continue;
    if (d.is_rank_one()) {
      const auto& r = std::get<DerivDescriptor::RankOne>(d.payload);
      accum.add_outer(ld_prod(b.pinv, r.u).cwiseAbs(),
                      ld_prod(pinv_t, r.v).cwiseAbs(), w);
    } else {
      const Matrix& dm = std::get<Matrix>(d.payload);
      accum.add(ld_prod(ld_prod(b.pinv, dm), b.pinv).cwiseAbs(), w);
    }
  }
  return report_from_pinv_kernel(ws, accum.value(), CnMode::range_restricted);
}

CnReport ls_cn_upper(const LsProblem& problem) {
  EvalContext ctx = evaluate_model(problem.model, problem.psi);
  Vector kernel = ls_upper_kernel(problem.ws, ctx.derivs, problem.psi.values,
                                  problem.b, problem.x, problem.residual);
  return report_from_ls_kernel(problem.ws, std::move(kernel), problem.x,
                               CnMode::upper_bound);
}

CnReport ls_cn_exact_fullrank(const LsProblem& problem) {
  if (problem.ws.bundle.rank < problem.ws.bundle.m.cols()) {
    throw NotFullColumnRankError(problem.ws.bundle.rank,
                                 problem.ws.bundle.m.cols());
  }
  EvalContext ctx = evaluate_model(problem.model, problem.psi);
  Vector kernel = ls_exact_kernel(problem.ws, ctx.derivs, problem.psi.values,
                                  problem.b, problem.x, problem.residual);
  return report_from_ls_kernel(problem.ws, std::move(kernel), problem.x,
                               CnMode::exact_full_rank);
}

CnReport ls_cn_unstructured(const Matrix& m, const Vector& b,
                            std::optional<double> rank_tol) {
  require_finite(m, "matrix");
  require_finite(b, "right-hand side");
  if (b.size() != m.rows()) {
    throw InvalidArgumentError("right-hand side length does not match rows");
  }
  CnWorkspace ws = make_workspace(m, rank_tol);
  const Vector x = ld_prod(ws.bundle.pinv, b);
  const Vector residual = b - ld_prod(m, x);
  const Vector ptx = ld_prod(Matrix(ws.bundle.pinv.transpose()), x);
  const Matrix abs_pinv = ws.bundle.pinv.cwiseAbs();
  const Matrix abs_m = m.cwiseAbs();
  const Matrix abs_m_t = m.transpose().cwiseAbs();
  VecAccum accum(m.cols());
  accum.add(ld_prod(ld_prod(abs_pinv, abs_m), Vector(x.cwiseAbs())));
  accum.add(ld_prod(ld_prod(Matrix(ws.pp_t.cwiseAbs()), abs_m_t),
                    Vector(residual.cwiseAbs())));
  accum.add(ld_prod(ld_prod(Matrix(ws.bundle.proj_f.cwiseAbs()), abs_m_t),
                    Vector(ptx.cwiseAbs())));
  accum.add(ld_prod(abs_pinv, Vector(b.cwiseAbs())));
  return report_from_ls_kernel(ws, accum.value(), x, CnMode::unstructured);
}

}  // namespace structcond
