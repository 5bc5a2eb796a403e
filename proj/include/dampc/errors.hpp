#pragma once

#include <stdexcept>
#include <string>

namespace dampc {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

/// A set required to be nonempty turned out to be empty.
struct InfeasibleSet : Error {
  using Error::Error;
};

/// An LP was unbounded in the queried direction.
struct Unbounded : Error {
  using Error::Error;
};

struct DimensionTooLarge : Error {
  using Error::Error;
};

/// Contractive-set iteration did not reach a fixed point.
struct NotConverged : Error {
  using Error::Error;
};

/// Contractive-set iteration collapsed to a lower-dimensional set.
struct EmptyInterior : Error {
  using Error::Error;
};

/// Measurement data falsified the standing noise/model assumptions:
/// the parameter set intersected with the non-falsified set is empty.
struct InconsistentData : Error {
  using Error::Error;
};

/// Offline design failed the contractivity margin test; carries the
/// violated margin so callers can redesign.
struct RedesignNeeded : Error {
  RedesignNeeded(const std::string& what, double margin_violation)
      : Error(what), margin(margin_violation) {}
  double margin;
};

/// The MPC program was infeasible. Only expected at the initial step.
struct ControllerInfeasible : Error {
  using Error::Error;
};

}  // namespace dampc
