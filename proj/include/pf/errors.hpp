#pragma once

#include <stdexcept>
#include <string>

namespace pf {

// Base class for all library failures.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : Error {
  using Error::Error;
};

// A momentum of zero length reached a pointwise evaluator.
struct SingularPointError : DomainError {
  using DomainError::DomainError;
};

// The cutoff profile vanishes identically, so normalizations are undefined.
struct DegenerateProfileError : Error {
  using Error::Error;
};

// A quadrature sample produced NaN or infinity.
struct PoisonedResultError : Error {
  using Error::Error;
};

struct ConvergenceError : Error {
  double residual = 0.0;
  ConvergenceError(const std::string& what, double r) : Error(what), residual(r) {}
};

struct ConditioningError : Error {
  using Error::Error;
};

struct ValidationError : Error {
  using Error::Error;
};

// An identity or acceptance check failed beyond its tolerance.
struct IdentityError : Error {
  using Error::Error;
};

}  // namespace pf
