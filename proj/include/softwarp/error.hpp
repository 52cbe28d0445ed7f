#pragma once

#include <stdexcept>
#include <string>

namespace softwarp {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor, map or grid dimensions do not agree, or a value violates a type invariant.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Point configuration is collinear or has coincident points.
class RankDeficientError : public Error {
 public:
  using Error::Error;
};

/// TPS system could not be solved (coincident control points, collinear sources).
class SingularSystemError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace softwarp
