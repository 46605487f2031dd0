#pragma once

#include <stdexcept>
#include <string>

namespace adatom {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration input. The message names the
/// offending field path (e.g. "delta.width").
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside an operation's documented domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: lost unitarity, non-convergence, insufficient cutoff.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Integrator step too coarse for the requested accuracy.
class StepSizeError : public NumericError {
 public:
  using NumericError::NumericError;
};

class ConvergenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Floquet branch tracking could not be resolved on the given grid.
class TrackingError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace adatom
