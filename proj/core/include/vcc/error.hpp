#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vcc {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not satisfy an operation's contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A kernel produced or received a NaN/Inf, or exp() would overflow.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A precondition on an argument's value was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A selection budget requests more refinements than a level can supply.
class BudgetError : public Error {
 public:
  BudgetError(const std::string& what, std::size_t segment_size)
      : Error(what), segment_size_(segment_size) {}

  std::size_t segment_size() const noexcept { return segment_size_; }

 private:
  std::size_t segment_size_;
};

/// Malformed configuration text. `line()` is 1-based; 0 when not tied to a line.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace vcc
