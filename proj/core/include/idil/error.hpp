#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace idil {

// Root of every exception the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes that do not line up for an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// An index outside its axis. `axis()` names the offending dimension.
class IndexError : public Error {
 public:
  IndexError(std::size_t axis, std::size_t index, std::size_t extent);
  std::size_t axis() const noexcept { return axis_; }

 private:
  std::size_t axis_;
};

// Malformed input file. `line()` is 1-based, 0 when not line-specific.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Invalid arguments or configuration (caller error).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Data that is well-formed but unusable (vocabulary mismatch, missing files).
class DataError : public Error {
 public:
  using Error::Error;
};

// A NaN or infinity surfaced during optimization.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace idil
