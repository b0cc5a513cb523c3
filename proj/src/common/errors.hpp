#pragma once

#include <stdexcept>
#include <string>

namespace sabrec {

// Base class for everything thrown by the library. The C API maps each
// subclass to a distinct status code.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : Error {
  using Error::Error;
};

struct NumericError : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace sabrec
