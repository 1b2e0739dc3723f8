#pragma once

#include <optional>
#include <string>

#include "structcond/linalg.hpp"
#include "structcond/param_model.hpp"

namespace structcond {

enum class CnMode { upper_bound, exact_full_rank, unstructured, range_restricted };

const char* to_string(CnMode mode);

// Paired mixed/componentwise condition values together with the kernel
// matrix (or vector, stored as an n x 1 matrix) their norms were read from.
struct CnReport {
  double mixed = 0.0;
  double componentwise = 0.0;
  Matrix kernel;
  Index rank = 0;
  CnMode mode = CnMode::upper_bound;
};

// Derived products shared by every kernel assembly for one matrix.
struct CnWorkspace {
  PinvBundle bundle;
  Matrix pp_t;  // M† M†ᵀ, n x n
  Matrix pt_p;  // M†ᵀ M†, m x m
};

CnWorkspace make_workspace(PinvBundle bundle);
CnWorkspace make_workspace(const Matrix& m, std::optional<double> rank_tol);

// Least-squares problem with its minimum-norm solution and residual.
struct LsProblem {
  MatrixModel model;
  ParamSet psi;
  Vector b;
  CnWorkspace ws;
  Vector x;         // M† b
  Vector residual;  // b - M x
};

LsProblem make_ls_problem(MatrixModel model, ParamSet psi, Vector b,
                          std::optional<double> rank_tol = {});

// --- Moore-Penrose inverse condition numbers -------------------------------

// General upper bound for arbitrary (possibly rank-deficient) models.
CnReport pinv_cn_upper(const MatrixModel& model, const ParamSet& psi,
                       std::optional<double> rank_tol = {});

// Exact values when the matrix has full column rank.
CnReport pinv_cn_exact_fullrank(const MatrixModel& model, const ParamSet& psi,
                                std::optional<double> rank_tol = {});

// Specialization of the upper bound to the entrywise parameterization.
CnReport pinv_cn_unstructured(const Matrix& m,
                              std::optional<double> rank_tol = {});

// Variant for perturbations confined to the row/column spaces: only the
// first kernel summand survives.
CnReport pinv_cn_range_restricted(const MatrixModel& model,
                                  const ParamSet& psi,
                                  std::optional<double> rank_tol = {});

// --- Minimum-norm least-squares condition numbers --------------------------

CnReport ls_cn_upper(const LsProblem& problem);
CnReport ls_cn_exact_fullrank(const LsProblem& problem);
CnReport ls_cn_unstructured(const Matrix& m, const Vector& b,
                            std::optional<double> rank_tol = {});

// --- Shared kernel assembly (used by the structure-specific modules) -------

// Kernel of the general pseudoinverse bound, assembled term by term from the
// descriptors in fixed parameter order.
Matrix pinv_upper_kernel(const CnWorkspace& ws,
                         const std::vector<DerivDescriptor>& derivs,
                         const Vector& psi);
Matrix pinv_exact_kernel(const CnWorkspace& ws,
                         const std::vector<DerivDescriptor>& derivs,
                         const Vector& psi);
Vector ls_upper_kernel(const CnWorkspace& ws,
                       const std::vector<DerivDescriptor>& derivs,
                       const Vector& psi, const Vector& b, const Vector& x,
                       const Vector& residual);
Vector ls_exact_kernel(const CnWorkspace& ws,
                       const std::vector<DerivDescriptor>& derivs,
                       const Vector& psi, const Vector& b, const Vector& x,
                       const Vector& residual);

// Reads the two condition values off a pseudoinverse kernel / an LS kernel.
CnReport report_from_pinv_kernel(const CnWorkspace& ws, Matrix kernel,
                                 CnMode mode);
CnReport report_from_ls_kernel(const CnWorkspace& ws, Vector kernel,
                               const Vector& x, CnMode mode);

}  // namespace structcond
