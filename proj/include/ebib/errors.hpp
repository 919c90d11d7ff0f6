#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ebib {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Requested operation is not supported by a model family or strategy.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// Problem size exceeds a hard limit (e.g. allocation enumeration).
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Not enough observations for a proper posterior.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Prior log-density not differentiable at the requested point.
class NonDifferentiableError : public Error {
 public:
  using Error::Error;
};

/// Oracle hyperparameter undefined for the given truth.
class DegenerateOracleError : public Error {
 public:
  using Error::Error;
};

/// No usable evaluation point for an estimator.
class EstimationError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Quadrature did not reach the requested tolerance.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double best_estimate)
      : Error(what), best_estimate_(best_estimate) {}
  double best_estimate() const noexcept { return best_estimate_; }

 private:
  double best_estimate_;
};

/// Importance-sampling estimate with too small an effective sample size.
class ReliabilityError : public Error {
 public:
  ReliabilityError(const std::string& what, double ess) : Error(what), ess_(ess) {}
  double ess() const noexcept { return ess_; }

 private:
  double ess_;
};

/// MCMC produced a non-finite state.
class SamplerError : public Error {
 public:
  SamplerError(const std::string& what, std::size_t iteration)
      : Error(what + " (iteration " + std::to_string(iteration) + ")"), iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace ebib
