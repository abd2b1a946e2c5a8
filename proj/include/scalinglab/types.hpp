#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace scalinglab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Bad argument values (non-positive sizes, exponents out of range, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Incompatible matrix dimensions.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A linear system that cannot be solved at the requested ridge.
class SingularSystemError : public std::runtime_error {
 public:
  SingularSystemError(const std::string& what, Index deficient_rank)
      : std::runtime_error(what), rank(deficient_rank) {}
  Index rank;
};

// Fixed-point / root-finding failure.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Evaluation at a pole of a closed-form expression (e.g. N = T).
class PoleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Least-squares fit could not be performed (degenerate design, too few points).
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// CSV / config parsing problems, annotated with a location where possible.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

inline void require_domain(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

}  // namespace scalinglab
