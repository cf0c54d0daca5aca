#pragma once

#include <stdexcept>
#include <string>

namespace gfp {

/// Covariance matrix has an eigenvalue below the relative PSD tolerance.
class NotPositiveSemidefiniteError : public std::runtime_error {
 public:
  explicit NotPositiveSemidefiniteError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Operation requires kernel metadata (e.g. a bounded-variation measure)
/// that the kernel does not carry.
class UnsupportedKernelError : public std::runtime_error {
 public:
  explicit UnsupportedKernelError(const std::string& what)
      : std::runtime_error(what) {}
};

/// File could not be read, parsed, or written.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gfp
