#pragma once

#include <stdexcept>
#include <string>

namespace vtreid {

// Base of every error the library throws. Callers that only need a message
// can catch this; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Precondition of an operation violated by its arguments.
class ContractError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

// Raised on any attempt to read identity labels from an unlabeled dataset.
class LabelAccessError : public ContractError {
 public:
  using ContractError::ContractError;
};

// A retrieval query whose identity has no gallery entry.
class ProtocolError : public ContractError {
 public:
  using ContractError::ContractError;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

}  // namespace vtreid
