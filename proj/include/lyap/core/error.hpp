#pragma once

#include <stdexcept>
#include <string>

namespace lyap {

// Root of every exception thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed setting, mismatched carriers, bad scenario file.
struct ConfigError : Error {
  using Error::Error;
};

// Raised while evaluating a map on a concrete input. Checks catch these and
// turn them into a failed report carrying the offending input.
struct EvaluationError : Error {
  using Error::Error;
};

// Non-finite state, eigen/Jacobi iteration cap, ...
struct NumericError : EvaluationError {
  using EvaluationError::EvaluationError;
};

// Fixed-point or other iteration that ran out of budget.
struct NonConvergence : NumericError {
  using NumericError::NumericError;
};

// Input outside the domain of a partial map (singular CP+D, non-SPD point).
struct DomainError : EvaluationError {
  using EvaluationError::EvaluationError;
};

// Raised by matnum when a pivot vanishes to working precision.
struct SingularMatrix : DomainError {
  SingularMatrix(const std::string& what, double pivot)
      : DomainError(what), pivot_magnitude(pivot) {}
  double pivot_magnitude;
};

struct NotPositiveSemidefinite : DomainError {
  using DomainError::DomainError;
};

// The finite-horizon supremum could not certify that the orbit tail stays
// below the running supremum. Distinct from a certificate failure.
struct InconclusiveTail : Error {
  using Error::Error;
};

}  // namespace lyap
