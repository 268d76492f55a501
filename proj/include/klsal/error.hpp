#pragma once

#include <stdexcept>
#include <string>

namespace klsal {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// NPY bytes with a bad magic, version, or header literal.
class MalformedContainer : public Error {
 public:
  using Error::Error;
};

/// NPY element type other than little-endian f4/f8, or Fortran order.
class UnsupportedDType : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

/// Perplexity target outside [1, K-1].
class TargetOutOfRange : public Error {
 public:
  using Error::Error;
};

/// The KL gradient has (numerically) zero spread, so it carries no signal.
class DegenerateGradient : public Error {
 public:
  using Error::Error;
};

class ValueOutOfRange : public Error {
 public:
  using Error::Error;
};

/// Non-finite or otherwise invalid input to a constructor.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// File-system or codec failure (missing files, unreadable PNG, ...).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace klsal
