#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace siw {

/// Base class of every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters, geometry or design-rule violations.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure of the field solver at a given frequency.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double frequency_hz)
      : Error(what + " (f = " + std::to_string(frequency_hz) + " Hz)"), frequency_hz_(frequency_hz) {}

  double frequency_hz() const noexcept { return frequency_hz_; }

 private:
  double frequency_hz_;
};

/// Malformed text input; carries a 1-based position.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace siw
