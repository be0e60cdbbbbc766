#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace eitbc {

//! Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

//! Invalid argument or violated precondition.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

//! A linear system that is singular or too badly conditioned to trust.
class SingularMatrixError : public Error {
public:
  SingularMatrixError(const std::string &what, double condition_estimate)
      : Error(what + " (condition estimate " + std::to_string(condition_estimate) + ")"),
        condition_(condition_estimate) {}
  double condition_estimate() const noexcept { return condition_; }

private:
  double condition_;
};

//! An iterative method that failed to reach its tolerance.
class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string &what, std::vector<double> residual_history)
      : Error(what), history_(std::move(residual_history)) {}
  const std::vector<double> &residual_history() const noexcept { return history_; }

private:
  std::vector<double> history_;
};

} // namespace eitbc
