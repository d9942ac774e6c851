#pragma once

#include <stdexcept>
#include <string>

namespace gcrn {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible matrix/vector dimensions. Message names both shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A precondition on input data was violated (empty scene, degenerate box,
// missing labels, out-of-range fraction, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A class/label index is outside its valid range.
class IndexError : public Error {
 public:
  using Error::Error;
};

// An operation was invoked in the wrong order (e.g. EM before pretraining).
class StateError : public Error {
 public:
  using Error::Error;
};

// Malformed input text. Carries the byte offset where parsing failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t byte_offset)
      : Error(message), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_ = 0;
};

// A record references an id that does not exist. Names the id.
class ReferentialError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Unknown or invalid configuration keys/values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Filesystem-level failure (unreadable/unwritable path).
class IoError : public Error {
 public:
  using Error::Error;
};

// Checkpoint failure modes, kept distinct so callers can tell them apart.
class CheckpointVersionError : public Error {
 public:
  using Error::Error;
};

class CheckpointTruncatedError : public Error {
 public:
  using Error::Error;
};

}  // namespace gcrn
