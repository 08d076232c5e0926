#pragma once

#include <stdexcept>
#include <string>

namespace dfr {

// Bad or inconsistent input data (files, shapes, invariant violations).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (NaN/Inf, divergence, singular systems).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dfr
