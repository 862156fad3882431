#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "evuas/norms.hpp"
#include "evuas/signals.hpp"

namespace evuas {

struct TrajectoryDiagnostics {
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t rhs_evaluations = 0;
  std::size_t controller_failures = 0;
  double min_step = std::numeric_limits<double>::infinity();
  double max_step = 0.0;
  double max_newton_residual = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> inputs;  // empty unless closed loop
  TrajectoryDiagnostics diagnostics;
  Norm norm = Norm::kEuclidean;

  std::size_t size() const noexcept { return times.size(); }
  double state_norm(std::size_t k) const;
  std::vector<double> state_norms() const;
  // sup of the state norm over samples with t >= t_from.
  double sup_norm_after(double t_from) const;
  // Throws std::logic_error unless times increase strictly and states are finite.
  void check_invariants() const;
};

struct IntegratorOptions {
  double tol = 1e-8;  // used as both absolute and relative tolerance
  double initial_step = 0.0;  // 0 selects a step automatically
  double max_step = std::numeric_limits<double>::infinity();
  FrequencyHint freq_hint;    // caps steps at a period / steps_per_period
  double steps_per_period = 8.0;
  // Dense-output sample times inside (t0, t_end]. Empty records every accepted step.
  std::vector<double> sample_times;
  std::size_t max_steps = 50'000'000;
  Norm norm = Norm::kEuclidean;
};

// dx = f(t, x). May throw; the integrator reports the failure with time and state.
using Rhs = std::function<void(double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx)>;

class IntegrationError : public std::runtime_error {
 public:
  enum class Kind { kMinStep, kNonFinite, kRhsFailure, kStepBudget };

  IntegrationError(Kind kind, const std::string& what, double t, Eigen::VectorXd last_state, Trajectory partial)
      : std::runtime_error(what), kind_(kind), t_(t), state_(std::move(last_state)), partial_(std::move(partial)) {}

  Kind kind() const noexcept { return kind_; }
  double time() const noexcept { return t_; }
  const Eigen::VectorXd& last_state() const noexcept { return state_; }
  const Trajectory& partial() const noexcept { return partial_; }

 private:
  Kind kind_;
  double t_;
  Eigen::VectorXd state_;
  Trajectory partial_;
};

std::string to_string(IntegrationError::Kind kind);

// Dormand-Prince 5(4) with the standard PI-free step controller and the
// pair's native 4th-order continuous extension for dense output.
Trajectory integrate(const Rhs& rhs, double t0, const Eigen::VectorXd& x0, double t_end,
                     const IntegratorOptions& opts = {});

// n+1 equally spaced times in [t0, t_end], both ends included.
std::vector<double> uniform_samples(double t0, double t_end, std::size_t n);

}  // namespace evuas
