#pragma once

#include <stdexcept>
#include <string>

namespace emergent {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Out-of-range index, non-positive temperature, and similar caller mistakes.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Malformed dataset or checkpoint file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// The request is valid but exceeds what an exact routine can enumerate.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// A precondition on a state or transition was violated.
class ContractError : public Error {
 public:
  using Error::Error;
};

class IllegalActionError : public ContractError {
 public:
  using ContractError::ContractError;
};

class DegenerateAnchorError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace emergent
