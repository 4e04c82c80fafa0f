#pragma once

#include <stdexcept>
#include <string>

namespace stedeflick {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Two inputs that must share a raster size do not.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// A precondition on argument values was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed file content (bad magic, truncated payload, unsupported header).
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace stedeflick
