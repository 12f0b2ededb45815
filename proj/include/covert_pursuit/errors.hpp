#pragma once

#include <stdexcept>
#include <string>

namespace covert {

/// Argument outside the mathematical domain of a model (negative speed, zero slot length, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file. `line` is 1-based, 0 when the error is not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Scenario or subproblem with no feasible point.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure inside a solver; carries the last KKT residual when known.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double kkt_residual = -1.0)
      : std::runtime_error(what), kkt_residual_(kkt_residual) {}
  double kkt_residual() const { return kkt_residual_; }

 private:
  double kkt_residual_;
};

/// Objective went up between accepted outer iterates. Indicates a bug, never a data problem.
class MonotonicityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Bad command line or configuration content.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace covert
