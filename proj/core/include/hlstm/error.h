#pragma once

#include <stdexcept>
#include <string>

namespace hlstm {

// Base class for recoverable failures (bad input files, bad configuration).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file or directory could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed content in an otherwise readable input (CSV, checkpoint, vectors).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Invalid arguments or configuration supplied by the caller.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Violated internal invariant (shape mismatch between a trace and its
// parameters, and similar programming errors).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace hlstm
