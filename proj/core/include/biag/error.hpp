#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace biag {

/// Base class for every error raised by the library. Each subclass maps to a
/// distinct failure category so callers (and the CLI exit-code table) can
/// dispatch on type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input is well-formed but geometrically degenerate (zero-norm row, empty
/// class, ...).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// A numeric evaluation produced NaN or Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// An API precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration; `field()` names the offending setting when known.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message, std::string field = {})
      : Error(message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A requested id is not present.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary file. `offset()` is the byte position where parsing
/// failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& message, std::uint64_t offset)
      : Error(message + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Filesystem failure (missing file, unwritable directory).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace biag
