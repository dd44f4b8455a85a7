#pragma once

#include <stdexcept>
#include <string>

namespace avgqoc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument or value outside the supported domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ZeroComponentError : public Error {
 public:
  using Error::Error;
};

class StepLimitExceeded : public Error {
 public:
  using Error::Error;
};

class StepUnderflow : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class SingularJacobian : public Error {
 public:
  using Error::Error;
};

class EmptyResult : public Error {
 public:
  using Error::Error;
};

class NoRoot : public Error {
 public:
  using Error::Error;
};

class ValidationFailed : public Error {
 public:
  using Error::Error;
};

// Malformed input file.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace avgqoc
