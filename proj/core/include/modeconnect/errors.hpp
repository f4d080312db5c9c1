#pragma once

#include <stdexcept>
#include <string>

namespace mc {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid shapes, indices, or arguments.
struct InvalidArgument : Error {
  using Error::Error;
};

/// Numerical failure: divergence, non-finite values, SVD non-convergence.
struct NumericalError : Error {
  using Error::Error;
};

/// Malformed files. `offset` is the byte position where parsing failed,
/// or -1 when it does not apply.
struct ParseError : Error {
  ParseError(const std::string& what, long long offset_bytes = -1)
      : Error(offset_bytes >= 0 ? what + " (at byte offset " + std::to_string(offset_bytes) + ")" : what),
        offset(offset_bytes) {}
  long long offset;
};

/// File system failure (missing file, unwritable path).
struct IoError : Error {
  using Error::Error;
};

}  // namespace mc
