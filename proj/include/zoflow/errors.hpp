#pragma once

#include <stdexcept>
#include <string>

namespace zoflow {

/// Precondition or configuration value out of range.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A declarative config file is missing, unparsable or does not resolve.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The positivity assumption on the pairwise cosine failed, so the
/// step-size bound does not apply.
class AssumptionViolated : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// ||f(u1) - f(u2)|| fell below the degeneracy threshold.
class DegeneratePair : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace zoflow
