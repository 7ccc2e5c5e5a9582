#pragma once

#include <stdexcept>
#include <string>

namespace cace {

// Base class for all errors raised by the library.  Validation errors and
// numerical errors are distinguished so the CLI can map them to exit codes.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ValidationError : Error {
  using Error::Error;
};

struct NumericalError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// population
struct LengthMismatch : ValidationError {
  using ValidationError::ValidationError;
};
struct DefierPresent : ValidationError {
  using ValidationError::ValidationError;
};
struct NoCompliers : ValidationError {
  using ValidationError::ValidationError;
};

// design
struct BadMargins : ValidationError {
  using ValidationError::ValidationError;
};
struct TooFewRows : ValidationError {
  using ValidationError::ValidationError;
};
struct BadProbability : ValidationError {
  using ValidationError::ValidationError;
};
struct SingularCovariance : NumericalError {
  using NumericalError::NumericalError;
};
struct MaxTriesExceeded : NumericalError {
  using NumericalError::NumericalError;
};

// regression
struct RankDeficient : NumericalError {
  using NumericalError::NumericalError;
};
struct LeverageOne : NumericalError {
  using NumericalError::NumericalError;
};

// estimators
struct EmptyArm : ValidationError {
  using ValidationError::ValidationError;
};
struct ArmTooSmall : ValidationError {
  using ValidationError::ValidationError;
};
struct NonpositiveIttW : NumericalError {
  using NumericalError::NumericalError;
};

// bayes
struct NoImputedCompliers : NumericalError {
  using NumericalError::NumericalError;
};

// simulation
struct InfeasibleTarget : NumericalError {
  using NumericalError::NumericalError;
};
struct EmptyInput : ValidationError {
  using ValidationError::ValidationError;
};

// io
struct MissingColumn : IoError {
  using IoError::IoError;
};
struct NonBinaryTreatment : IoError {
  using IoError::IoError;
};
struct ParseError : IoError {
  using IoError::IoError;
};

}  // namespace cace
