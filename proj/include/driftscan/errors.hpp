#pragma once

#include <stdexcept>
#include <string>

namespace driftscan {

// Bad inputs: malformed files, contract violations, out-of-range config.
class ValidationError : public std::runtime_error {
  public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numeric failures at runtime: non-finite losses, failed decompositions.
class NumericError : public std::runtime_error {
  public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace driftscan
