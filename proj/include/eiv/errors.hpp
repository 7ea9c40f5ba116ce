#ifndef EIV_ERRORS_HPP
#define EIV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace eiv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A modelling assumption failed a runtime check. The CLI maps these to exit code 2.
class AssumptionViolation : public Error {
 public:
  using Error::Error;
};

class UnsupportedOrder : public Error {
 public:
  using Error::Error;
};

class ConstructionError : public Error {
 public:
  using Error::Error;
};

class NoninvertibleGamma : public Error {
 public:
  using Error::Error;
};

class UnidentifiableBand : public AssumptionViolation {
 public:
  using AssumptionViolation::AssumptionViolation;
};

class NoSignal : public AssumptionViolation {
 public:
  using AssumptionViolation::AssumptionViolation;
};

class DivergentIntegrand : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class WindowSelectionError : public AssumptionViolation {
 public:
  using AssumptionViolation::AssumptionViolation;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace eiv

#endif  // EIV_ERRORS_HPP
