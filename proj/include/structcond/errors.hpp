#pragma once

#include <stdexcept>
#include <string>

namespace structcond {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Shape mismatch, non-finite entries, bad argument values.
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// Inputs for which the requested quantity is undefined (zero matrix for a
// pseudoinverse condition number, zero minimum-norm solution, ...).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// An exact full-column-rank formula was requested on a matrix whose
// numerical rank is below its column count.
class NotFullColumnRankError : public Error {
 public:
  NotFullColumnRankError(long rank, long cols)
      : Error("matrix does not have full column rank (rank " +
              std::to_string(rank) + " of " + std::to_string(cols) + ")"),
        rank_(rank),
        cols_(cols) {}
  long rank() const { return rank_; }
  long cols() const { return cols_; }

 private:
  long rank_;
  long cols_;
};

// A Cauchy node coincides exactly with a pole node.
class NodeCollisionError : public Error {
 public:
  NodeCollisionError(long i, long j, double value)
      : Error("node collision: c[" + std::to_string(i + 1) + "] == d[" +
              std::to_string(j + 1) + "] == " + std::to_string(value)),
        i_(i),
        j_(j) {}
  long node_index() const { return i_; }
  long pole_index() const { return j_; }

 private:
  long i_;
  long j_;
};

// A parameter vector is outside a model's admissible domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed input files or JSON objects that do not match a schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// The SVD backend failed to produce finite factors.
class SvdError : public Error {
 public:
  using Error::Error;
};

}  // namespace structcond
