#pragma once

#include <stdexcept>
#include <string>

namespace sparcs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A factorization or solve hit a (numerically) singular system.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

/// Exact integer arithmetic would overflow its fixed width.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Malformed CSV, checkpoint or config text.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Requested shape or topology is not supported by the operation.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Bad caller input that is not a shape problem (empty sets, out of range).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Training diverged (non-finite loss).
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace sparcs
