#pragma once

#include <stdexcept>
#include <string>

namespace fosmpc {

// Bad or unreadable run configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Bad or unreadable input data, e.g. a malformed CSV (CLI exit code 3).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fosmpc
