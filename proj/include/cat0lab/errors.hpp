#pragma once

#include <stdexcept>
#include <string>

namespace cat0lab {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands from different groups/spaces, invalid coordinates, etc.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Configured radius, support-size or memory budget exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// word_length target not reachable within the configured radius cap.
class RadiusExceededError : public ResourceError {
 public:
  RadiusExceededError(const std::string& what, int cap)
      : ResourceError(what), radius_cap(cap) {}
  int radius_cap;
};

/// Iterative solver failed to reach the requested tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual = 0.0)
      : Error(what), last_residual(residual) {}
  double last_residual;
};

/// Malformed configuration / descriptor.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace cat0lab
