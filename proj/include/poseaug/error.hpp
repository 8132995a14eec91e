#pragma once

#include <stdexcept>
#include <string>

namespace poseaug {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside its documented domain (e.g. non-positive scale).
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Two inputs that must agree in size do not.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class DegenerateTransform : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an API contract (stale cache, missing no-gradient marker, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace poseaug
