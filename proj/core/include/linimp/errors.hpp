#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace linimp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidNodes : public Error {
 public:
  using Error::Error;
};

class DegenerateNodes : public Error {
 public:
  using Error::Error;
};

class ModeMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidSpectrum : public Error {
 public:
  using Error::Error;
};

class NonRealResult : public Error {
 public:
  using Error::Error;
};

class NumericalBreakdown : public Error {
 public:
  using Error::Error;
};

class MissingExactSolution : public Error {
 public:
  using Error::Error;
};

class IrreversibleProblem : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Errors raised while time stepping carry the index of the failing step.
class StepError : public Error {
 public:
  StepError(const std::string& what, std::int64_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

class StageSolveFailure : public StepError {
 public:
  using StepError::StepError;
};

class BlowupDetected : public StepError {
 public:
  using StepError::StepError;
};

class NonlinearSolveFailure : public StepError {
 public:
  using StepError::StepError;
};

}  // namespace linimp
