#pragma once

#include <stdexcept>
#include <string>

namespace naxray {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A point was evaluated outside the engulfing disc.
struct DomainError : Error {
  using Error::Error;
};

/// Bad counts, margins, tolerances or shapes.
struct ParameterError : Error {
  using Error::Error;
};

/// The integrated trajectory left the engulfing disc.
struct FlowEscapeError : Error {
  FlowEscapeError(const std::string& what, double t) : Error(what), escape_time(t) {}
  double escape_time;
};

/// Time budget exhausted before the boundary was reached.
struct NonTrappingError : Error {
  using Error::Error;
};

struct GlancingError : Error {
  using Error::Error;
};

/// Input data violating a mathematical precondition (non-positive loop,
/// singular gauge, attenuation outside a subalgebra, ...).
struct InputError : Error {
  using Error::Error;
};

struct ConvergenceError : Error {
  ConvergenceError(const std::string& what, double residual)
      : Error(what), last_residual(residual) {}
  double last_residual;
};

/// Two computations that must agree did not.
struct InconsistencyError : Error {
  using Error::Error;
};

struct DegeneracyError : Error {
  using Error::Error;
};

}  // namespace naxray
