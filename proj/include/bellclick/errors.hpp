#pragma once

#include <stdexcept>
#include <string>

namespace bellclick {

/// Argument outside the mathematical domain of an operation (negative
/// intensity, negative gain, non-finite angle, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Input that is formally valid but makes a quantity undefined, e.g. a
/// certain click in a denominator channel of the nonlinear criterion.
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid run or sweep configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Root bracket without a sign change.
class BracketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bellclick
