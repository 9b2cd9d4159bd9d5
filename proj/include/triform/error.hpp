#pragma once

#include <stdexcept>
#include <string>

namespace triform {

// Base for every error raised by the library. The CLI maps ValidationError
// and its subclasses to exit code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Caller passed an argument outside the operation's domain.
class InvalidArgument : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Inputs are individually valid but inconsistent with each other
// (dimension mismatch, label count mismatch, non-orthonormal basis).
class ContractViolation : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// On-disk data does not match its declared layout.
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A statistic is mathematically undefined for the input (constant vector,
// all-zero centered matrix). Distinct from a legitimate value of zero.
class UndefinedResult : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace triform
