#pragma once

#include <stdexcept>
#include <string>

namespace rldx {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A trace record could not be decoded. `field()` names the offending field.
class ParseError : public Error {
 public:
  ParseError(std::string field, const std::string& what)
      : Error("parse error in field '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class UnsupportedEventError : public Error {
 public:
  explicit UnsupportedEventError(const std::string& tag)
      : Error("unsupported event type '" + tag + "'"), tag_(tag) {}
  const std::string& tag() const noexcept { return tag_; }

 private:
  std::string tag_;
};

class VersionError : public Error {
 public:
  explicit VersionError(long long found)
      : Error("unsupported wire-format version " + std::to_string(found) + " (expected 1)") {}
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class OrderingError : public Error {
 public:
  using Error::Error;
};

class RegistrationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace rldx
