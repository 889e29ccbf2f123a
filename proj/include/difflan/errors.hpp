#pragma once

#include <stdexcept>
#include <string>

namespace difflan {

/// Invalid or inconsistent experiment configuration (bad grid size,
/// drift outside the admissible ball, mismatched handles, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure with diagnostics attached (eigensolver
/// non-convergence, positivity floor breach, ...).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace difflan
