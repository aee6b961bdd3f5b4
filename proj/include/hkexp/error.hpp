#pragma once

#include <stdexcept>
#include <string>

namespace hkexp {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// An operator does not have the hbar-grading expected at its index.
class GradingViolation : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a function (non-positive time, hbar*s >= 1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Internal consistency check failed.
class InternalError : public Error {
 public:
  using Error::Error;
};

/// Malformed interchange data (JSON documents, fixture names).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A requested computation exceeds a configured size limit.
class ResourceLimit : public Error {
 public:
  using Error::Error;
};

inline void require_same_dim(int a, int b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                            " vs " + std::to_string(b) + ")");
  }
}

}  // namespace hkexp
