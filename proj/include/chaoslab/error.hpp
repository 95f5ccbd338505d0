#pragma once

#include <stdexcept>
#include <string>

namespace chaoslab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Request exceeds the configured memory budget.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Evaluation inside the core of an unmollified singular kernel.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Non-finite state produced by a time integrator.
class NumericalBlowup : public Error {
 public:
  using Error::Error;
};

/// Time step violates the transport CFL guard.
class StepSizeError : public Error {
 public:
  StepSizeError(const std::string& what, double suggested_dt)
      : Error(what), suggested_dt_(suggested_dt) {}
  double suggested_dt() const { return suggested_dt_; }

 private:
  double suggested_dt_;
};

/// Operation not defined for the given kernel variant.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration; `key_path` names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key_path, const std::string& what)
      : Error(key_path.empty() ? what : key_path + ": " + what), key_path_(key_path) {}
  const std::string& key_path() const { return key_path_; }

 private:
  std::string key_path_;
};

}  // namespace chaoslab
