#pragma once

#include <stdexcept>
#include <string>

namespace xtc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A document does not conform to its interchange schema (missing or mistyped field).
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A structurally valid value breaks a domain invariant. `element()` names the offender.
class InvariantError : public Error {
 public:
  InvariantError(std::string element, const std::string& what)
      : Error(what), element_(std::move(element)) {}
  const std::string& element() const noexcept { return element_; }

 private:
  std::string element_;
};

/// Precondition failure on an operation's input (empty selection, uncovered candidate, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A response from a model could not be parsed into the expected shape.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Transport-level failure talking to an external model. `transient()` drives retries.
class ClientError : public Error {
 public:
  ClientError(const std::string& what, bool transient) : Error(what), transient_(transient) {}
  bool transient() const noexcept { return transient_; }

 private:
  bool transient_;
};

}  // namespace xtc
