#pragma once

#include <stdexcept>
#include <string>

namespace semgest {

// Base for every error raised by the library. The CLI maps ValidationError
// and its subclasses to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input violates a documented precondition or file-format invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Tensor shapes do not fit the requested primitive.
class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A NaN or infinity showed up where only finite values are allowed.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Artifacts produced under different pipeline configurations were combined.
class ConfigMismatchError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace semgest
