#include "structcond/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace structcond {

namespace {

void validate_spec(const PerturbSpec& spec, Index p) {
  if (!(spec.epsilon >= 0.0)) {
    throw InvalidArgumentError("perturbation size must be nonnegative");
  }
  if ((spec.mode == PerturbMode::sign_vertices ||
       spec.mode == PerturbMode::extrapolated) &&
      p <= 20) {
    // full enumeration below; nothing to check
  } else if (spec.mode == PerturbMode::sign_vertices) {
    throw InvalidArgumentError(
        "sign_vertices mode enumerates 2^p vertices and is capped at p <= 20");
  }
  if (spec.mode == PerturbMode::extrapolated) {
    if (spec.eps_ladder.size() < 2) {
      throw InvalidArgumentError("extrapolation ladder needs two values");
    }
    for (size_t i = 0; i < spec.eps_ladder.size(); ++i) {
      if (!(spec.eps_ladder[i] > 0.0)) {
        throw InvalidArgumentError("extrapolation ladder must be positive");
      }
      if (i > 0 && !(spec.eps_ladder[i] < spec.eps_ladder[i - 1])) {
        throw InvalidArgumentError("extrapolation ladder must decrease");
      }
    }
  }
}

// Unit directions: entries in [-1, 1]; the actual perturbation is
// dpsi_k = eps * dir_k * psi_k.
struct DirectionSource {
  const PerturbSpec& spec;
  Index p;
  long count;  // number of directions to visit
  bool enumerate_vertices;

  DirectionSource(const PerturbSpec& s, Index p_in) : spec(s), p(p_in) {
    enumerate_vertices = (spec.mode != PerturbMode::monte_carlo) && p <= 20;
    count = enumerate_vertices ? (1L << p) : spec.trials;
  }

  Vector direction(long index) const {
    Vector dir(p);
    if (enumerate_vertices) {
      for (Index k = 0; k < p; ++k) {
        dir(k) = ((index >> k) & 1L) ? 1.0 : -1.0;
      }
    } else {
      Rng rng = Rng::substream(spec.seed, static_cast<std::uint64_t>(index));
      if (spec.mode == PerturbMode::monte_carlo) {
        for (Index k = 0; k < p; ++k) dir(k) = rng.uniform(-1.0, 1.0);
      } else {
        for (Index k = 0; k < p; ++k) dir(k) = rng.coin() ? 1.0 : -1.0;
      }
    }
    return dir;
  }
};

Vector scale_direction(const Vector& dir, const Vector& psi, double eps) {
  return eps * dir.cwiseProduct(psi);
}

struct PerturbedPinv {
  bool accepted = false;
  Matrix pinv;
};

PerturbedPinv perturbed_pinv(const MatrixModel& model, const Vector& psi,
                             const Vector& dpsi, const PinvBundle& ref) {
  PerturbedPinv out;
  const Vector shifted = psi + dpsi;
  if (!model.check(shifted).ok) return out;
  const Matrix mt = model.eval(shifted);
  if (!mt.allFinite()) return out;
  const double pinv_norm2 =
      ref.rank > 0 ? 1.0 / ref.singular_values(ref.rank - 1) : 0.0;
  if (!(pinv_norm2 * spectral_norm(Matrix(mt - ref.m)) < 1.0)) return out;
  PinvBundle bt = pinv(mt, ref.tol_used);
  if (bt.rank != ref.rank) return out;
  out.accepted = true;
  out.pinv = std::move(bt.pinv);
  return out;
}

double richardson(double f1, double eps1, double f2, double eps2) {
  // f(eps) = L + C eps + O(eps^2); eliminate the linear term from the two
  // smallest ladder values.
  const double l = f2 + (f2 - f1) * eps2 / (eps1 - eps2);
  return std::max(l, 0.0);
}

// Structurally zero entries of a computed pseudoinverse carry rounding
// noise instead of exact zeros. The componentwise ratios treat reference
// entries below this floor with the pass-through convention, which keeps
// the estimate a valid lower bound.
double noise_floor(const PinvBundle& ref) {
  const double pinv_norm2 =
      ref.rank > 0 ? 1.0 / ref.singular_values(ref.rank - 1) : 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  return static_cast<double>(std::max(ref.m.rows(), ref.m.cols())) * eps *
         pinv_norm2;
}

double floored_comp_norm(const Matrix& delta, const Matrix& ref,
                         double floor) {
  double worst = 0.0;
  for (Index j = 0; j < delta.cols(); ++j) {
    for (Index i = 0; i < delta.rows(); ++i) {
      const double r = std::abs(ref(i, j));
      const double d = std::abs(delta(i, j));
      worst = std::max(worst, r > floor ? d / r : d);
    }
  }
  return worst;
}

double floored_comp_norm(const Vector& delta, const Vector& ref,
                         double floor) {
  double worst = 0.0;
  for (Index i = 0; i < delta.size(); ++i) {
    const double r = std::abs(ref(i));
    const double d = std::abs(delta(i));
    worst = std::max(worst, r > floor ? d / r : d);
  }
  return worst;
}

}  // namespace

bool perturbation_accepted(const MatrixModel& model, const ParamSet& psi,
                           const Vector& dpsi, const PinvBundle& reference) {
  if (dpsi.size() != psi.size()) {
    throw InvalidArgumentError("perturbation length mismatch");
  }
  const Vector shifted = psi.values + dpsi;
  if (!model.check(shifted).ok) return false;
  const Matrix mt = model.eval(shifted);
  if (!mt.allFinite()) return false;
  if (numerical_rank(mt, reference.tol_used) != reference.rank) return false;
  const double pinv_norm2 =
      reference.rank > 0
          ? 1.0 / reference.singular_values(reference.rank - 1)
          : 0.0;
  return pinv_norm2 * spectral_norm(Matrix(mt - reference.m)) < 1.0;
}

std::optional<Vector> sample_perturbation(const ParamSet& psi,
                                          const PerturbSpec& spec,
                                          const MatrixModel& model, Rng& rng) {
  const Index p = psi.size();
  Vector dir(p);
  if (spec.mode == PerturbMode::monte_carlo) {
    for (Index k = 0; k < p; ++k) dir(k) = rng.uniform(-1.0, 1.0);
  } else {
    for (Index k = 0; k < p; ++k) dir(k) = rng.coin() ? 1.0 : -1.0;
  }
  Vector dpsi = scale_direction(dir, psi.values, spec.epsilon);
  const PinvBundle ref = pinv(model.eval(psi.values));
  if (!perturbation_accepted(model, psi, dpsi, ref)) return std::nullopt;
  return dpsi;
}

OracleEstimate estimate_pinv_cn(const MatrixModel& model, const ParamSet& psi,
                                const PerturbSpec& spec,
                                std::optional<double> rank_tol) {
  const DomainStatus st = model.check(psi.values);
  if (!st.ok) {
    throw DomainError("parameter vector outside model domain: " + st.reason);
  }
  const Index p = psi.size();
  validate_spec(spec, p);
  const PinvBundle ref = pinv(model.eval(psi.values), rank_tol);
  const double denom = max_norm(ref.pinv);
  if (denom == 0.0) {
    throw DegenerateInputError("zero matrix: condition number undefined");
  }

  const bool extrapolate = spec.mode == PerturbMode::extrapolated;
  double eps1 = spec.epsilon, eps2 = spec.epsilon;
  if (extrapolate) {
    eps1 = spec.eps_ladder[spec.eps_ladder.size() - 2];
    eps2 = spec.eps_ladder[spec.eps_ladder.size() - 1];
  }

  OracleEstimate est;
  const double floor = noise_floor(ref);
  DirectionSource dirs(spec, p);
  for (long idx = 0; idx < dirs.count; ++idx) {
    const Vector dir = dirs.direction(idx);
    auto ratios = [&](double eps, bool* ok) -> std::pair<double, double> {
      const Vector dpsi = scale_direction(dir, psi.values, eps);
      const PerturbedPinv pt = perturbed_pinv(model, psi.values, dpsi, ref);
      if (!pt.accepted) {
        *ok = false;
        return {0.0, 0.0};
      }
      *ok = true;
      const Matrix delta = pt.pinv - ref.pinv;
      return {max_norm(delta) / (eps * denom),
              floored_comp_norm(delta, ref.pinv, floor) / eps};
    };
    bool ok1 = true, ok2 = true;
    double mixed, comp;
    if (extrapolate) {
      const auto [m1, c1] = ratios(eps1, &ok1);
      const auto [m2, c2] = ratios(eps2, &ok2);
      if (!ok1 || !ok2) {
        ++est.rejected;
        continue;
      }
      mixed = richardson(m1, eps1, m2, eps2);
      comp = richardson(c1, eps1, c2, eps2);
    } else {
      std::tie(mixed, comp) = ratios(spec.epsilon, &ok1);
      if (!ok1) {
        ++est.rejected;
        continue;
      }
    }
    ++est.accepted;
    if (mixed > est.mixed_lb) {
      est.mixed_lb = mixed;
      est.achiever = scale_direction(dir, psi.values, extrapolate ? eps2
                                                                  : spec.epsilon);
    }
    est.componentwise_lb = std::max(est.componentwise_lb, comp);
  }
  est.inconclusive = est.accepted == 0;
  return est;
}

OracleEstimate estimate_ls_cn(const LsProblem& problem,
                              const PerturbSpec& spec,
                              std::optional<double> rank_tol) {
  const MatrixModel& model = problem.model;
  const Index p = problem.psi.size();
  validate_spec(spec, p);
  const PinvBundle& ref = rank_tol && *rank_tol != problem.ws.bundle.tol_used
                              ? pinv(problem.ws.bundle.m, rank_tol)
                              : problem.ws.bundle;
  const Vector& x = problem.x;
  const double denom = inf_norm(x);
  if (denom == 0.0) {
    throw DegenerateInputError("zero minimum-norm solution");
  }
  const Index m = problem.b.size();

  // Candidate right-hand-side sign patterns: one attaining pattern per
  // solution row, plus the plain relative perturbation.
  std::vector<Vector> betas;
  const bool random_b = spec.mode == PerturbMode::monte_carlo;
  if (!random_b) {
    betas.reserve(static_cast<size_t>(ref.pinv.rows()) + 1);
    for (Index l = 0; l < ref.pinv.rows(); ++l) {
      Vector beta(m);
      for (Index i = 0; i < m; ++i) {
        const double s = ref.pinv(l, i);
        const double sgn = (s > 0.0) - (s < 0.0);
        beta(i) = sgn * std::abs(problem.b(i));
      }
      betas.push_back(std::move(beta));
    }
    betas.push_back(problem.b);
  }

  const bool extrapolate = spec.mode == PerturbMode::extrapolated;
  double eps1 = spec.epsilon, eps2 = spec.epsilon;
  if (extrapolate) {
    eps1 = spec.eps_ladder[spec.eps_ladder.size() - 2];
    eps2 = spec.eps_ladder[spec.eps_ladder.size() - 1];
  }

  OracleEstimate est;
  const double floor = noise_floor(ref) * inf_norm(problem.b);
  DirectionSource dirs(spec, p);
  for (long idx = 0; idx < dirs.count; ++idx) {
    const Vector dir = dirs.direction(idx);
    Vector random_beta;
    if (random_b) {
      Rng rng = Rng::substream(spec.seed ^ 0x5851f42d4c957f2dull,
                               static_cast<std::uint64_t>(idx));
      random_beta = Vector(m);
      for (Index i = 0; i < m; ++i) {
        random_beta(i) = rng.uniform(-1.0, 1.0) * problem.b(i);
      }
    }
    auto ratios_at = [&](double eps, bool* ok) {
      std::pair<double, double> best{0.0, 0.0};
      const Vector dpsi = scale_direction(dir, problem.psi.values, eps);
      const PerturbedPinv pt = perturbed_pinv(model, problem.psi.values, dpsi,
                                              ref);
      if (!pt.accepted) {
        *ok = false;
        return best;
      }
      *ok = true;
      auto consider = [&](const Vector& beta) {
        const Vector xt = ld_prod(pt.pinv, Vector(problem.b + eps * beta));
        const Vector delta = xt - x;
        best.first = std::max(best.first, inf_norm(delta) / (eps * denom));
        best.second =
            std::max(best.second, floored_comp_norm(delta, x, floor) / eps);
      };
      if (random_b) {
        consider(random_beta);
      } else {
        for (const Vector& beta : betas) consider(beta);
      }
      return best;
    };
    bool ok1 = true, ok2 = true;
    double mixed, comp;
    if (extrapolate) {
      const auto [m1, c1] = ratios_at(eps1, &ok1);
      const auto [m2, c2] = ratios_at(eps2, &ok2);
      if (!ok1 || !ok2) {
        ++est.rejected;
        continue;
      }
      mixed = richardson(m1, eps1, m2, eps2);
      comp = richardson(c1, eps1, c2, eps2);
    } else {
      std::tie(mixed, comp) = ratios_at(spec.epsilon, &ok1);
      if (!ok1) {
        ++est.rejected;
        continue;
      }
    }
    ++est.accepted;
    if (mixed > est.mixed_lb) {
      est.mixed_lb = mixed;
      est.achiever = scale_direction(dir, problem.psi.values,
                                     extrapolate ? eps2 : spec.epsilon);
    }
    est.componentwise_lb = std::max(est.componentwise_lb, comp);
  }
  est.inconclusive = est.accepted == 0;
  return est;
}

FdReport fd_check(const MatrixModel& model, const ParamSet& psi,
                  const StepRule& step_rule) {
  const DomainStatus st = model.check(psi.values);
  if (!st.ok) {
    throw DomainError("parameter vector outside model domain: " + st.reason);
  }
  const std::vector<DerivDescriptor> derivs = model.derivs(psi.values);
  FdReport report;
  for (Index k = 0; k < psi.size(); ++k) {
    FdEntry entry;
    entry.k = k;
    const DerivDescriptor& d = derivs[static_cast<size_t>(k)];
    if (d.scaled_by_param && psi.values(k) == 0.0) {
      entry.skipped = true;
      entry.note = "zero parameter in scaled form";
      report.entries.push_back(std::move(entry));
      continue;
    }
    const Matrix analytic = d.unscaled_dense(psi.values(k));

    double h = step_rule ? step_rule(psi.values(k))
                         : 1e-6 * std::max(1.0, std::abs(psi.values(k)));
    bool domain_ok = false;
    Vector plus, minus;
    for (int shrink = 0; shrink <= 3; ++shrink) {
      plus = psi.values;
      minus = psi.values;
      plus(k) += h;
      minus(k) -= h;
      if (model.check(plus).ok && model.check(minus).ok) {
        domain_ok = true;
        break;
      }
      h /= 10.0;
    }
    if (!domain_ok) {
      entry.skipped = true;
      entry.note = "domain violation persisted after shrinking the step";
      report.entries.push_back(std::move(entry));
      continue;
    }
    entry.h_used = h;
    const Matrix fd = (model.eval(plus) - model.eval(minus)) / (2.0 * h);
    for (Index j = 0; j < fd.cols(); ++j) {
      for (Index i = 0; i < fd.rows(); ++i) {
        const double a = analytic(i, j);
        const double diff = std::abs(fd(i, j) - a);
        if (std::abs(a) > 1e-12) {
          entry.rel_error = std::max(entry.rel_error, diff / std::abs(a));
        } else {
          report.floor_abs_error = std::max(report.floor_abs_error, diff);
        }
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.rel_error);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace structcond
