#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <string>

#include "evuas/signals.hpp"

namespace evuas {

// W(t, X) acting on the last-derivative channel, in one of three forms:
// identically zero, a pure time signal W(t), or the product D(t) K(X).
class Perturbation {
 public:
  enum class Kind { kZero, kTimeOnly, kFactored };

  using MatrixSignal = std::function<Eigen::MatrixXd(double t)>;
  using StateMap = std::function<Eigen::VectorXd(const Eigen::VectorXd& x)>;

  struct Flags {
    bool bounded_columns = false;
    bool diminishing_claimed = false;
  };

  static Perturbation zero(std::size_t dim);
  static Perturbation time_only(TimeSignal w);
  // D: dim x dim matrix signal, K: state (any length) -> R^dim.
  static Perturbation factored(std::size_t dim, MatrixSignal d, StateMap k,
                               FrequencyHint hint = {});

  Kind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }

  // Throws EvaluationError on non-finite output.
  Eigen::VectorXd evaluate(double t, const Eigen::VectorXd& x) const;
  // Adds W(t, x) into out (length dim) without allocating for kZero/kTimeOnly.
  void accumulate(double t, const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> out) const;

  // Time-only W(t) rewritten as D(t) = Diag(W(t)), K = (1, ..., 1).
  Perturbation as_factored() const;

  // Column j of D(t) as a time signal. For kTimeOnly there is one column, W itself.
  std::size_t column_count() const;
  TimeSignal column(std::size_t j) const;

  const FrequencyHint& freq_hint() const noexcept { return hint_; }

  Flags flags;
  std::string name;

 private:
  Kind kind_ = Kind::kZero;
  std::size_t dim_ = 0;
  TimeSignal signal_;
  MatrixSignal d_;
  StateMap k_;
  FrequencyHint hint_;
};

}  // namespace evuas
