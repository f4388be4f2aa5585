#pragma once

#include <stdexcept>
#include <string>

namespace spinsim {

/// Invalid user-supplied configuration (bad JSON field, length mismatch,
/// step size violating a stability bound). The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A model produced a non-finite or otherwise unusable value at run time.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// ODE integration left the admissible region.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spinsim
