#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mindplane {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Input violates a type invariant (dimension, range, finiteness, ...).
class ValidationError : public Error {
public:
  using Error::Error;
};

// Requested range lies outside the available data.
class BoundsError : public Error {
public:
  using Error::Error;
};

// Numerically degenerate input: singular matrices, zero traces, cancelled averages.
class DegenerateError : public Error {
public:
  using Error::Error;
};

// Iterative method did not converge within its iteration budget.
class ConvergenceError : public Error {
public:
  using Error::Error;
};

// A sample was refused by a stream consumer; the stream itself may continue.
class SampleRejected : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

// Malformed wire or file content. offset is a byte offset (binary formats)
// or a 1-based line number (text formats).
class ParseError : public Error {
public:
  // unit names the offset in the message: "(at 12)", "(line 3)".
  ParseError(const std::string& what, std::size_t offset, const std::string& unit = "at")
      : Error(what + " (" + unit + " " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const { return offset_; }

private:
  std::size_t offset_;
};

} // namespace mindplane
