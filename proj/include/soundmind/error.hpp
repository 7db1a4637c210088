#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace soundmind {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A configuration value violates a documented constraint.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// A reference length annotation of zero (division by zero in the length reward).
class InvalidAnnotation : public Error {
public:
  using Error::Error;
};

}  // namespace soundmind
