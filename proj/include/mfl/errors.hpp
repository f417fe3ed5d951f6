#pragma once

#include <stdexcept>
#include <string>

namespace mfl {

// Bad user input: malformed config, missing file, out-of-range parameter.
// The CLI maps this to exit code 1; everything else thrown is exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mfl
