#pragma once

#include <stdexcept>
#include <string>

namespace polarfilm {

/// Base class of every error raised by the library. The kind is used by the
/// command-line tool to pick an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched image or tensor dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite or out-of-domain sample values.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid scalar parameter or configuration value.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Operation invoked in the wrong state (e.g. backward without a recorded forward).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Malformed or version-incompatible file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure; the message carries the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Training aborted (non-finite loss). The message names the dump location.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace polarfilm
