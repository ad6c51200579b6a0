#pragma once

#include <stdexcept>
#include <string>

namespace emdarts {

// Base for every error raised by the library. The CLI maps subclasses onto
// exit codes, so pick the most specific one.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bad caller-supplied data (labels out of range, empty probes, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace emdarts

namespace emdarts {

// A structurally invalid architecture (cyclic edges, wrong in-degree, ...).
class ValidationError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace emdarts
