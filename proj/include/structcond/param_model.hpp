#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "structcond/linalg.hpp"

namespace structcond {

// Ordered vector of real parameters with labels for reports.
struct ParamSet {
  Vector values;
  std::vector<std::string> labels;

  Index size() const { return values.size(); }
};

ParamSet make_param_set(Vector values, std::string prefix = "psi");

// One partial derivative of a parameterized matrix: either a dense matrix
// or a rank-one pair u v^T. When `scaled_by_param` is set the payload is
// psi_k * dM/dpsi_k; a zero parameter then contributes an exactly-zero term.
struct DerivDescriptor {
  struct RankOne {
    Vector u;  // length m
    Vector v;  // length n
  };
  std::variant<Matrix, RankOne> payload;
  bool scaled_by_param = false;

  static DerivDescriptor dense(Matrix d, bool scaled = false);
  static DerivDescriptor rank_one(Vector u, Vector v, bool scaled = false);

  bool is_rank_one() const {
    return std::holds_alternative<RankOne>(payload);
  }
  // Materializes the payload as a dense matrix.
  Matrix to_dense() const;
  // dM/dpsi_k as a dense matrix; requires psi_k != 0 for scaled payloads.
  Matrix unscaled_dense(double psi_k) const;
};

struct DomainStatus {
  bool ok = true;
  std::string reason;
};

// A parameterized matrix: evaluation plus analytic partial derivatives in
// parameter order. Evaluators must be stateless.
struct MatrixModel {
  Index rows = 0;
  Index cols = 0;
  std::function<Matrix(const Vector&)> eval;
  std::function<std::vector<DerivDescriptor>(const Vector&)> derivs;
  std::function<DomainStatus(const Vector&)> domain_check;

  DomainStatus check(const Vector& psi) const {
    return domain_check ? domain_check(psi) : DomainStatus{};
  }
};

// The model whose parameters are the mn entries of a fixed matrix, in
// row-major order. Derivatives are rank-one unit descriptors.
MatrixModel entrywise_model(const Matrix& m);
ParamSet entrywise_params(const Matrix& m);

}  // namespace structcond
