#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "structcond/cn_engine.hpp"
#include "structcond/linalg.hpp"
#include "structcond/param_model.hpp"
#include "structcond/rng.hpp"

namespace structcond {

enum class PerturbMode { sign_vertices, monte_carlo, extrapolated };

struct PerturbSpec {
  double epsilon = 1e-6;       // componentwise relative size
  long trials = 1000;          // draws for the random modes
  std::uint64_t seed = 0;
  PerturbMode mode = PerturbMode::sign_vertices;
  // Decreasing ladder for the extrapolated mode; the two smallest values
  // feed a first-order Richardson step.
  std::vector<double> eps_ladder = {1e-5, 1e-6, 1e-7};
};

struct OracleEstimate {
  double mixed_lb = 0.0;
  double componentwise_lb = 0.0;
  long rejected = 0;
  long accepted = 0;
  Vector achiever;           // the dPsi attaining the mixed maximum
  bool inconclusive = false; // every sample was rejected
};

// Acceptance predicate of the rank-preserving perturbation set: the
// numerical rank (under the reference tolerance) must not move and the
// spectral smallness condition must hold.
bool perturbation_accepted(const MatrixModel& model, const ParamSet& psi,
                           const Vector& dpsi, const PinvBundle& reference);

// Draws one perturbation: uniform in the componentwise box for the
// monte_carlo mode, a random sign vertex otherwise. Returns nothing when
// the draw is rejected.
std::optional<Vector> sample_perturbation(const ParamSet& psi,
                                          const PerturbSpec& spec,
                                          const MatrixModel& model, Rng& rng);

// Worst-case ratio search for the pseudoinverse condition numbers.
OracleEstimate estimate_pinv_cn(const MatrixModel& model, const ParamSet& psi,
                                const PerturbSpec& spec,
                                std::optional<double> rank_tol = {});

// Worst-case ratio search for the least-squares condition numbers;
// perturbs the parameters and the right-hand side jointly.
OracleEstimate estimate_ls_cn(const LsProblem& problem,
                              const PerturbSpec& spec,
                              std::optional<double> rank_tol = {});

// Finite-difference check of analytic derivatives.
struct FdEntry {
  Index k = 0;
  double h_used = 0.0;
  double rel_error = 0.0;
  bool skipped = false;
  std::string note;
};

struct FdReport {
  double max_rel_error = 0.0;
  // Largest |analytic - fd| over entries below the relative-error floor.
  double floor_abs_error = 0.0;
  std::vector<FdEntry> entries;
};

using StepRule = std::function<double(double /*psi_k*/)>;

FdReport fd_check(const MatrixModel& model, const ParamSet& psi,
                  const StepRule& step_rule = {});

}  // namespace structcond
