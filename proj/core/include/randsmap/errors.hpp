// Error taxonomy shared across the library.
//
// std::invalid_argument is used directly for precondition violations on
// caller-supplied parameters. The types below distinguish failures that the
// command-line front end maps to distinct exit codes.

#pragma once

#include <stdexcept>
#include <string>

namespace randsmap {

// Numerical failure inside an algorithm (rank deficiency, divergence,
// degenerate kernels, feature-map mismatch).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Time-step stability violation in a PDE integrator. The solvers abort
// instead of silently sub-stepping because the step size is part of the
// dataset definition.
class StabilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Missing, corrupt, or unwritable files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace randsmap
