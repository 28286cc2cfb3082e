#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nnr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite data, shape mismatch, asymmetric matrix and similar caller mistakes.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Cholesky pivot below threshold.
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

class RankDeficientError : public Error {
 public:
  using Error::Error;
};

/// Iteration cap hit. Carries the best iterate found so far.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, std::vector<double> best, double gap)
      : Error(what), best_iterate(std::move(best)), residual_gap(gap) {}

  std::vector<double> best_iterate;
  double residual_gap;
};

/// The active-set solver revisited an active set.
class CyclingError : public Error {
 public:
  CyclingError(const std::string& what, std::vector<double> best)
      : Error(what), best_iterate(std::move(best)) {}

  std::vector<double> best_iterate;
};

class UndefinedBoundError : public Error {
 public:
  using Error::Error;
};

class RunawayPathError : public Error {
 public:
  using Error::Error;
};

}  // namespace nnr
