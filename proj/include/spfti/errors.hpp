#pragma once

#include <stdexcept>
#include <string>

namespace spfti {

/// Base of all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector lengths or basis sizes that do not fit the operator.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An index component outside its 1-based range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Arguments that violate a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Dense materialization or brute-force computation above the configured cap.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated files.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failures, always carrying the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace spfti
