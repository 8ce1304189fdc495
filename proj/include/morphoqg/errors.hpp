#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace morphoqg {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (exit code 2 in the CLI).
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateKeyError : public DataError {
 public:
  using DataError::DataError;
};

class FileError : public DataError {
 public:
  using DataError::DataError;
};

class EmptyInputError : public DataError {
 public:
  using DataError::DataError;
};

class CutoffExceeded : public DataError {
 public:
  using DataError::DataError;
};

class IndexOutOfVocab : public DataError {
 public:
  using DataError::DataError;
};

class LengthMismatch : public DataError {
 public:
  using DataError::DataError;
};

class UnknownRuleError : public Error {
 public:
  using Error::Error;
};

class DanglingTransError : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace morphoqg
