#pragma once

#include <stdexcept>
#include <string>

namespace qaug {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A size bound was exceeded (qubit count, samples available per class).
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// A qubit, class or layer index is out of range.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// Dimensions of two operands disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A file header or payload does not follow the expected format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A file is shorter than its header promises.
class LengthError : public Error {
 public:
  using Error::Error;
};

/// Two inputs that must agree (image and label files, cache and network) do not.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// An invalid or contradictory configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Empty or otherwise unusable data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// NaN, Inf or a broken numeric invariant.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace qaug
