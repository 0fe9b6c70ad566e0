#pragma once

#include <stdexcept>
#include <string>

namespace melonfield {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the documented domain of an operation (e.g. lambda <= 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Resolvent requested on its cut without a side.
class BranchCutError : public Error {
 public:
  using Error::Error;
};

class PoleError : public Error {
 public:
  using Error::Error;
};

/// Eigenvalue collision, vanishing interaction denominator, or a singular resolvent.
class SingularityError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

/// A numerical procedure ran out of refinement budget before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class SignProblemError : public Error {
 public:
  SignProblemError(const std::string& what, double phase_mean)
      : Error(what), phase_mean_(phase_mean) {}
  double phase_mean() const { return phase_mean_; }

 private:
  double phase_mean_;
};

/// Internal failure of the planar moment recursion to close; indicates a bug.
class ClosureError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : Error(field + ": " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace melonfield
