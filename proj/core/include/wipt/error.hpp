#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wipt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument violates an operation's precondition (negative power,
/// inconsistent dimensions, invalid moment pair, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Not enough samples to run an estimator or fit.
class InsufficientDataError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// A variant or problem size the operation does not handle.
class UnsupportedError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// The requested target cannot be met. `max_attainable` carries the best
/// value the constraint set admits, in the units of the violated target.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, double max_attainable)
      : Error(what), max_attainable_(max_attainable) {}

  double max_attainable() const noexcept { return max_attainable_; }

 private:
  double max_attainable_;
};

/// An iterative solver hit its iteration cap. The best iterate found is
/// attached so callers can still inspect it.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> best_iterate,
                   double best_residual)
      : Error(what),
        best_iterate_(std::move(best_iterate)),
        best_residual_(best_residual) {}

  const std::vector<double>& best_iterate() const noexcept { return best_iterate_; }
  double best_residual() const noexcept { return best_residual_; }

 private:
  std::vector<double> best_iterate_;
  double best_residual_;
};

}  // namespace wipt
