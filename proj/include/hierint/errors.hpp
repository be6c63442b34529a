#pragma once

#include <stdexcept>
#include <string>

namespace hierint {

// Argument outside the documented domain (bad dimensions, non-positive
// tolerance, invalid penalty parameters, ...).
struct DomainError : std::invalid_argument {
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed external input: unreadable file, ragged CSV, unknown config key.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hierint
