#pragma once

#include <stdexcept>
#include <string>

namespace icta {

// Base for every error raised by the library. The CLI maps subclasses to
// exit codes (validation 2, numerical 3, I/O 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Coupling at or beyond the parametric instability (Xi >= 1).
class DivergenceError : public DomainError {
 public:
  using DomainError::DomainError;
};

// A grid or curve does not contain the feature being extracted.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Iterative or adaptive numerics failed to meet tolerance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Measured inputs contradict the calibration model.
class InconsistencyError : public Error {
 public:
  using Error::Error;
};

// Bad user configuration; `path` names the offending field.
class ValidationError : public Error {
 public:
  ValidationError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace icta
