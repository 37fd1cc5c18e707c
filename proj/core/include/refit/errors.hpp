#pragma once

#include <stdexcept>
#include <string>

namespace refit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unsupported input files (CSV, JSON artifacts).
class IngestError : public Error {
 public:
  using Error::Error;
};

/// Vector / matrix / encoding sizes that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A caller-supplied argument or configuration value is out of range.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: divergence, singular systems, non-finite values.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace refit
