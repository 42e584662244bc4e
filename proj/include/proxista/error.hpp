#pragma once

#include <stdexcept>
#include <string>

namespace proxista {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions do not agree.
class ShapeError : public Error {
public:
  using Error::Error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// A proximal step was requested with alpha * rho >= 1, where the threshold
/// problem stops being strictly convex.
class StepTooLarge : public Error {
public:
  StepTooLarge(double alpha, double rho)
      : Error("step too large: alpha*rho = " + std::to_string(alpha * rho) +
              " must be < 1 (alpha = " + std::to_string(alpha) +
              ", rho = " + std::to_string(rho) + ")"),
        alpha_(alpha), rho_(rho) {}

  double alpha() const noexcept { return alpha_; }
  double rho() const noexcept { return rho_; }

private:
  double alpha_;
  double rho_;
};

/// An iterative eigenvalue estimate did not settle within its budget.
/// Carries the best estimates reached so far.
class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& what, double best_min, double best_max)
      : Error(what), best_min_(best_min), best_max_(best_max) {}

  double best_min() const noexcept { return best_min_; }
  double best_max() const noexcept { return best_max_; }

private:
  double best_min_;
  double best_max_;
};

/// Experiment/CLI configuration rejected during validation.
class SpecError : public Error {
public:
  using Error::Error;
};

} // namespace proxista
