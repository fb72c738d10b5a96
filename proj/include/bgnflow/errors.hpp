#pragma once

#include <stdexcept>
#include <string>

namespace bgnflow {

// Base class for every failure the library reports.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad degree, element count, or field sizes.
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// Initial curve unusable (repeated endpoints, zero chords).
class InvalidGeometryError : public Error {
 public:
  using Error::Error;
};

// An element's Jacobian collapsed below the positivity threshold.
class MeshDegenerationError : public Error {
 public:
  using Error::Error;
};

// Averaged normal vanished at a node; the constraint row would be void.
class DegenerateNormalError : public Error {
 public:
  using Error::Error;
};

// Linear system pivot fell below the singularity threshold.
class SingularSystemError : public Error {
 public:
  using Error::Error;
};

// Point left the retraction tube around the exact curve.
class ProjectionDomainError : public Error {
 public:
  using Error::Error;
};

// Iteration failed to reach its tolerance.
class NonconvergenceError : public Error {
 public:
  using Error::Error;
};

// Malformed input or unwritable output.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace bgnflow
