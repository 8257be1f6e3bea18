#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fairstream {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration, constraint or window geometry.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A label that is not part of the attribute schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Stream positions that do not strictly increase.
class SequenceError : public Error {
 public:
  using Error::Error;
};

/// Input that is too small (or too large) for the requested operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace fairstream
