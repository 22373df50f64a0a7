#pragma once

#include <stdexcept>
#include <string>

namespace traj {

// Raised for malformed or unusable input (files, rows, geometry, off-route
// trips). The CLI maps this to exit code 2; anything else escaping to the
// top level is treated as an internal error (exit code 3).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace traj
