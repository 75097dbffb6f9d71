#pragma once

#include <stdexcept>
#include <string>

namespace oassign {

// Base for everything thrown by this library that stems from bad input or
// config. Internal invariant violations use InternalError instead, so callers
// (and the CLI exit-code mapping) can tell the two apart.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class InternalError : public Error {
 public:
  explicit InternalError(const std::string& msg) : Error("internal: " + msg) {}
};

// Box with non-positive or sub-threshold extent.
class DegenerateBox : public Error {
 public:
  using Error::Error;
};

// Covariance with |det| at or below the usable floor.
class SingularCovariance : public Error {
 public:
  using Error::Error;
};

// Point set with no 2d extent (min-area rectangle undefined).
class CollinearInput : public Error {
 public:
  using Error::Error;
};

class EmptyImage : public Error {
 public:
  using Error::Error;
};

class EmptyOffsets : public Error {
 public:
  using Error::Error;
};

// Annotation text that cannot be parsed; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& reason)
      : Error("line " + std::to_string(line) + ": " + reason), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class UnknownCategory : public Error {
 public:
  using Error::Error;
};

// Synthetic population could not be placed under the disjointness rules.
class PlacementFailure : public Error {
 public:
  using Error::Error;
};

// A gt fell outside every configured report bin.
class BinMismatch : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Output stream rejected a write.
class SinkError : public Error {
 public:
  using Error::Error;
};

}  // namespace oassign
