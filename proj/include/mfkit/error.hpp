#pragma once

#include <stdexcept>
#include <string>

namespace mfkit {

/// Raised when an input violates a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a construction cannot be completed at the available resolution
/// (cover budget unreachable, packing failure, LP too large).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

}  // namespace detail
}  // namespace mfkit
