#pragma once

#include <stdexcept>
#include <string>

namespace provenance {

// Base of every error thrown by the engine.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Caller supplied data that violates a format or domain rule.
class ValidationError : public Error {
public:
  using Error::Error;
};

// Filesystem or stream failure.
class IoError : public Error {
public:
  using Error::Error;
};

// A tamper-evident structure failed verification.
class IntegrityError : public Error {
public:
  using Error::Error;
};

// A verdict cannot be produced, e.g. one side of the comparison is empty.
class NotDeterminable : public Error {
public:
  using Error::Error;
};

} // namespace provenance
