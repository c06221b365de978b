#pragma once

#include <stdexcept>
#include <string>

namespace droc {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value violates a documented range or precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix dimensions do not agree.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf found where finite values are required.
class NonFiniteInput : public Error {
 public:
  using Error::Error;
};

/// The data cannot produce a meaningful model (e.g. only one class).
class DegenerateData : public Error {
 public:
  using Error::Error;
};

/// A point handed to a KKT check is outside the feasible set.
class InfeasiblePoint : public Error {
 public:
  using Error::Error;
};

/// Reading or parsing an input file failed.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Model document could not be read or written.
class ModelIOError : public Error {
 public:
  enum class Kind { kIO, kMalformed, kVersion, kChecksum, kIntegrity };

  ModelIOError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace droc
