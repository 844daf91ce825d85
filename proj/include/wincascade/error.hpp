#pragma once

#include <stdexcept>
#include <string>

namespace wincascade {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments or configuration (bad policy, bad flag values).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (CSV, UQC1, misaligned tables).
class DataError : public Error {
 public:
  using Error::Error;
};

/// An operating criterion that no threshold can satisfy.
class UnsatisfiableError : public Error {
 public:
  using Error::Error;
};

}  // namespace wincascade
