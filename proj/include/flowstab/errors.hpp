#pragma once

#include <stdexcept>
#include <string>

namespace flowstab {

/// Invalid parameters or data supplied by the caller (bad config, bad shapes,
/// inadmissible traces). The CLI maps these to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure failed (singular solve, blow-up, non-convergence).
/// The CLI maps these to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace flowstab
