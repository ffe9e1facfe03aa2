#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sticky {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments: mismatched horizons, grids that do not cover the window, ...
class DomainError : public Error {
 public:
  using Error::Error;
};

// A structural invariant of a value was violated at runtime.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

// A modelling assumption (well-posedness, admissibility) fails for the data.
class AssumptionViolation : public Error {
 public:
  AssumptionViolation(std::string assumption, const std::string& what)
      : Error(assumption + ": " + what), assumption_(std::move(assumption)) {}
  const std::string& assumption() const { return assumption_; }

 private:
  std::string assumption_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double contraction_ratio)
      : Error(what), ratio_(contraction_ratio) {}
  double contraction_ratio() const { return ratio_; }

 private:
  double ratio_;
};

// A simulated state left the admissible region beyond the discretization band.
class AdmissibilityViolation : public Error {
 public:
  AdmissibilityViolation(const std::string& what, double deficit)
      : Error(what), deficit_(deficit) {}
  double deficit() const { return deficit_; }

 private:
  double deficit_;
};

class NumericalBlowup : public Error {
 public:
  NumericalBlowup(const std::string& what, std::size_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace sticky
