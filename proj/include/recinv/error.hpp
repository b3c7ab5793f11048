#pragma once

#include <stdexcept>
#include <string>

namespace recinv {

/// Fatal error raised by any stage of the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Transport-level failure that a caller may retry (timeouts, 5xx).
class RetryableError : public Error {
 public:
  using Error::Error;
};

}  // namespace recinv
