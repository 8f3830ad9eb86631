#pragma once

#include <stdexcept>
#include <string>

namespace posphase {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A NaN or Inf surfaced in a tensor.
class NumericError : public Error {
 public:
  using Error::Error;
};

// API misuse, e.g. backward() on a non-scalar.
class UsageError : public Error {
 public:
  using Error::Error;
};

// A loss with no contributing positions.
class EmptyLossError : public Error {
 public:
  using Error::Error;
};

// Position id or shift outside the context window.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Sentence too long for the requested corpus layout.
class SizeError : public Error {
 public:
  using Error::Error;
};

// Invalid model or run configuration. key() names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// Missing or malformed file.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace posphase
