#pragma once

#include <stdexcept>
#include <string>

namespace mobility {

/// Base of every error thrown by the library. `tag()` is the short
/// machine-readable kind printed by the CLI.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* tag() const noexcept = 0;
};

class ParameterError : public Error {
 public:
  using Error::Error;
  const char* tag() const noexcept override { return "parameter"; }
};

class DomainError : public Error {
 public:
  using Error::Error;
  const char* tag() const noexcept override { return "domain"; }
};

class CapacityError : public Error {
 public:
  using Error::Error;
  const char* tag() const noexcept override { return "capacity"; }
};

class StructureError : public Error {
 public:
  using Error::Error;
  const char* tag() const noexcept override { return "structure"; }
};

class ContractError : public Error {
 public:
  using Error::Error;
  const char* tag() const noexcept override { return "contract"; }
};

/// Iterative solver gave up. Carries the best residual reached.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_residual)
      : Error(what), best_residual_(best_residual) {}
  const char* tag() const noexcept override { return "convergence"; }
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

}  // namespace mobility
