#pragma once

#include <stdexcept>
#include <string>

namespace milkit {

/// Base error for all milkit failures. Maps to CLI exit code 2.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad user configuration (unknown keys, invalid field combinations). Exit code 2.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Numerical failure during optimization (NaN loss). Exit code 3.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& msg) : Error(msg) {}
};

}  // namespace milkit
