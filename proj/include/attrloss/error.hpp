#pragma once

#include <stdexcept>
#include <string>

namespace attrloss {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape or length mismatch between operands.
struct DimensionError : Error {
  using Error::Error;
};

// Malformed file contents (bad magic, header, or payload).
struct FormatError : Error {
  using Error::Error;
};

// Non-finite values where finite math was required.
struct NumericError : Error {
  using Error::Error;
};

// Inputs on which the operation is mathematically undefined
// (zero-norm vectors, empty crops, zero-extent axes).
struct DegenerateInputError : Error {
  using Error::Error;
};

// Bad configuration keys, values, or missing referenced paths.
struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace attrloss
