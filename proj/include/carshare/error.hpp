#pragma once

#include <stdexcept>
#include <string>

namespace carshare {

// Raised for bad input, configuration or data that a user can fix. The CLI
// maps it to exit code 1; anything else escaping main is exit code 2.
class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace carshare
