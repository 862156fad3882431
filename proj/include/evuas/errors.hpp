#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evuas {

// Operand shapes do not match the model (m, n) or each other.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// F, W or a signal produced NaN/Inf. `component` is the first offending index.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, std::size_t component)
      : std::runtime_error(what), component_(component) {}
  std::size_t component() const noexcept { return component_; }

 private:
  std::size_t component_;
};

// Quadrature could not meet its tolerance within the evaluation budget.
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(const std::string& what, double best_estimate, double error_bound)
      : std::runtime_error(what), best_estimate_(best_estimate), error_bound_(error_bound) {}
  double best_estimate() const noexcept { return best_estimate_; }
  double error_bound() const noexcept { return error_bound_; }

 private:
  double best_estimate_;
  double error_bound_;
};

// A design input violates a hypothesis of the construction (non-Hurwitz,
// missing conjugate, uncontrollable pair, ...).
class DesignError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace evuas
