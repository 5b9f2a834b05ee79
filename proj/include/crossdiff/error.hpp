#pragma once

#include <stdexcept>
#include <string>

namespace crossdiff {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point or argument lies outside the domain an operation is defined on.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent or invalid parameters (bad model constants, mismatched
/// trajectories, rejection sampler too inefficient, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A particle left the simulation box, or too much mass reached its edge.
class BoundaryEscape : public Error {
 public:
  using Error::Error;
};

/// The fixed time step violates the stability bound.
class StepSizeError : public Error {
 public:
  using Error::Error;
};

/// The finite-volume update produced a cell below the positivity floor.
class SchemeFailure : public Error {
 public:
  using Error::Error;
};

/// Not enough samples/replicas for a statistical estimator.
class StatisticsError : public Error {
 public:
  using Error::Error;
};

/// Problem too large for an exact solver.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Configuration text could not be parsed; carries the 1-based line number
/// (0 when the problem is not tied to a line).
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& message)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace crossdiff
