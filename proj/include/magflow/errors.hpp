#pragma once

#include <stdexcept>
#include <string>

namespace magflow {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Adaptive integration could not make progress (step size underflow or step budget exhausted).
class IntegrationFailure : public Error {
 public:
  IntegrationFailure(const std::string& what, double last_good_time)
      : Error(what), last_good_time_(last_good_time) {}
  double last_good_time() const noexcept { return last_good_time_; }

 private:
  double last_good_time_;
};

// A pointwise geometric query was made on a model that only carries a curvature profile.
class UnsupportedQuery : public Error {
 public:
  using Error::Error;
};

// Quadrature did not reach the requested accuracy at the finest permitted grid.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

// A perpendicular Jacobi field vanishing at 0 vanishes again inside the requested range.
class ConjugatePointError : public Error {
 public:
  ConjugatePointError(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

// Two routes that must agree did not, or a monotone quantity was observed to decrease.
class NumericalInconsistency : public Error {
 public:
  using Error::Error;
};

// Argument outside the domain of the operation (e.g. time outside a trace).
class DomainError : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

// Invalid or unreadable run configuration; `key` names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace magflow
