#pragma once

#include <stdexcept>
#include <string>

namespace geoxray {

/// Invalid configuration or violated precondition on user input.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values, trapped rays and other failures of the numerics.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace geoxray
