#pragma once

#include <stdexcept>
#include <string>

namespace ain {

// Base for all errors raised by the simulator. Each subclass names one
// failure category so callers (and tests) can match on the kind.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file or record. `line` is 1-based, 0 when not applicable
// (binary files report a byte offset in the message instead).
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Argument outside the operation's domain (zero vector, bad count, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class DuplicateError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Observation / composition service failures.
class ProviderError : public Error {
 public:
  using Error::Error;
};

}  // namespace ain
