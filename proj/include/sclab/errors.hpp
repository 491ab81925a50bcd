#pragma once

#include <stdexcept>
#include <string>

namespace sclab {

// Point outside the open domain of a barrier (or too close to its boundary).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Caller violated a documented precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Linear algebra breakdown: singular Hessian, non-SPD metric, etc.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Iterative method hit its cap. `last_value` carries the last decrement or
// residual so callers can report how far off they were.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double last_value)
      : NumericalError(what), last_value_(last_value) {}
  double last_value() const { return last_value_; }

 private:
  double last_value_;
};

// Lowest two eigenvalues closer than the degeneracy tolerance.
class DegenerateSpectrumError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Configuration file problems (unknown kinds, missing fields).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sclab
