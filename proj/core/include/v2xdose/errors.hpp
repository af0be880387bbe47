#pragma once

#include <stdexcept>
#include <string>

namespace v2xdose {

// Malformed input text (scene file, config file, CSV).
class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Input parsed but violates a model invariant. The message names the
// offending entity.
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Argument outside the domain of a physical formula.
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

// Inconsistent run configuration (e.g. a grid height missing for a model).
class ConfigError : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

}  // namespace v2xdose
