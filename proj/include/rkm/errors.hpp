#pragma once

#include <stdexcept>
#include <string>

namespace rkm {

// Invalid input or configuration: bad dimensions, out-of-range parameters,
// malformed config values.  The CLI maps this to exit code 2.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// File system failure while reading or writing experiment data.  Exit code 3.
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rkm
