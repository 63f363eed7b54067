#pragma once

#include <stdexcept>
#include <string>

namespace specboltz {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or precondition violation.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Adaptive quadrature failed to reach its tolerance.
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double achieved_error)
      : Error(what + " (achieved error estimate " + std::to_string(achieved_error) + ")"),
        achieved_error_(achieved_error) {}
  double achieved_error() const { return achieved_error_; }

 private:
  double achieved_error_;
};

/// File-format problems: bad magic, version, truncation, I/O failures.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A cached weight table or state dump does not match the requested run.
class MetadataMismatch : public Error {
 public:
  using Error::Error;
};

/// Non-finite values appeared in the evolving state.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration file or key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace specboltz
