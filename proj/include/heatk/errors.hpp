#pragma once

#include <stdexcept>
#include <string>

namespace heatk {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid graph description (asymmetric weights, bad measure, disconnected ...).
class GraphError : public Error {
 public:
  using Error::Error;
};

/// Vertex index outside the graph.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Argument outside an operation's domain (t <= 0, eps <= 0, gamma <= 0 ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A stated precondition of an estimate does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// An iterative method stopped without meeting its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Scenario or file validation failure. `field` is a JSON-pointer-ish path.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace heatk
