#pragma once

#include <stdexcept>
#include <string>

namespace metacog {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed formula text, bad intervals, unknown signal names.
struct ParseError : Error {
  ParseError(const std::string& msg, int line, int column)
      : Error(msg + " at " + std::to_string(line) + ":" + std::to_string(column)),
        line(line),
        column(column) {}
  int line;
  int column;
};

// Shape or schema mismatch between inputs.
struct DimensionError : Error {
  using Error::Error;
};

// A temporal window truncated to nothing, an underfilled buffer, etc.
struct EmptyWindowError : Error {
  using Error::Error;
};

// Singular or rank-deficient linear system.
struct NumericError : Error {
  using Error::Error;
};

// Invalid configuration value or file.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace metacog
