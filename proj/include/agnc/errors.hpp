#pragma once

#include <stdexcept>
#include <string>

namespace agnc {

/// Argument outside the mathematical domain of an operation (negative or
/// non-finite residual, unsorted grid, rotation angle at pi, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid or incomplete configuration (unknown kernel, non-positive scale).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A distribution fit did not produce a usable parameter.
class FittingError : public std::runtime_error {
 public:
  FittingError(const std::string& what, double last_iterate)
      : std::runtime_error(what), last_iterate_(last_iterate) {}
  explicit FittingError(const std::string& what)
      : std::runtime_error(what), last_iterate_(0.0) {}

  double last_iterate() const noexcept { return last_iterate_; }

 private:
  double last_iterate_;
};

/// Normal equations are singular (rank-deficient design or degenerate geometry).
class RankError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Objective became non-finite during an iterative solve.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure inside a nested solve, re-thrown with the outer context attached.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace agnc
