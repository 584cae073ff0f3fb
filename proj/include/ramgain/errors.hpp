#pragma once

#include <stdexcept>
#include <string>

namespace ramgain {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector / matrix sizes do not line up with the declared grid or layers.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// The counter-propagating boundary iteration exceeded its iteration cap.
class NonConvergence : public Error {
 public:
  using Error::Error;
};

/// A propagated power went negative beyond tolerance or non-finite.
class NumericBlowup : public Error {
 public:
  using Error::Error;
};

/// A persisted file does not match the expected schema or version.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Bad or inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A ds2 record has no ds1 partner with matching id and pump powers.
class UnpairedRecord : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

}  // namespace ramgain
