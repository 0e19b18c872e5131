#pragma once

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace mmor {

/// Root of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error {
 public:
  using Error::Error;
};

/// A (0,2)-tensor (or reduced tensor / mass matrix) failed the nondegeneracy
/// test. Carries the condition estimate and, when raised during time
/// integration, the time of failure.
class DegenerateTensor : public Error {
 public:
  DegenerateTensor(const std::string& what, double condition,
                   std::optional<double> time = std::nullopt)
      : Error(what), condition_(condition), time_(time) {}

  double condition() const { return condition_; }
  std::optional<double> time() const { return time_; }

 private:
  double condition_;
  std::optional<double> time_;
};

class NotSkewSymmetric : public Error {
 public:
  using Error::Error;
};

class StructureViolation : public Error {
 public:
  using Error::Error;
};

/// Residual-carrying constraint failures.
class ResidualError : public Error {
 public:
  ResidualError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class BiorthogonalityError : public ResidualError {
 public:
  using ResidualError::ResidualError;
};

class ConstraintError : public ResidualError {
 public:
  using ResidualError::ResidualError;
};

class NotSymplectic : public ResidualError {
 public:
  using ResidualError::ResidualError;
};

class InvalidArchitecture : public Error {
 public:
  using Error::Error;
};

class CapabilityError : public Error {
 public:
  using Error::Error;
};

class IllConditionedFit : public Error {
 public:
  using Error::Error;
};

class DivergedTraining : public Error {
 public:
  using Error::Error;
};

/// Integration failures; all carry the time at which they happened.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double time)
      : Error(what + " at t=" + std::to_string(time)), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

class StepLimit : public IntegrationError {
 public:
  using IntegrationError::IntegrationError;
};

class NonConvergence : public IntegrationError {
 public:
  using IntegrationError::IntegrationError;
};

class Blowup : public IntegrationError {
 public:
  using IntegrationError::IntegrationError;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

inline void requireDim(long actual, long expected, const char* what) {
  if (actual != expected) {
    throw InvalidDimension(std::string(what) + ": expected dimension " +
                           std::to_string(expected) + ", got " +
                           std::to_string(actual));
  }
}

}  // namespace mmor
