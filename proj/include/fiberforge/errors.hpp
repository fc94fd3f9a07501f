#pragma once

#include <stdexcept>
#include <string>

namespace fiberforge {

/// Bad argument or precondition violated by the caller.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input data (CSV rows, model files).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ModelLoadError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// A model was used for the wrong task direction.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Training produced a non-finite loss.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Percentage error against a zero reference mean.
class UndefinedReference : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace fiberforge
