#pragma once

#include <stdexcept>
#include <string>

namespace regretlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of decision/outcome/parameter vectors do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A parameter lies outside its admissible box or ball.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A party broke the game protocol (e.g. an out-of-space outcome).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// An exhaustive computation would not fit the configured limits.
class SizeError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Malformed JSON configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A checked inequality or hard constraint did not hold.
class AssertionFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace regretlab
