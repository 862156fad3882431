#pragma once

#include <Eigen/Dense>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "evuas/integrator.hpp"
#include "evuas/perturbation.hpp"
#include "evuas/synthesis.hpp"
#include "evuas/tracking.hpp"

namespace evuas {

struct SimulationOptions {
  double tol = 1e-8;
  std::vector<double> sample_times;  // empty: every accepted step
  double max_step = std::numeric_limits<double>::infinity();
  FrequencyHint freq_hint;           // defaults to the perturbation's hint
  std::size_t max_steps = 50'000'000;
  Norm norm = Norm::kEuclidean;
};

// A trajectory that could not be completed. `residual` is the Newton residual
// when the controller failed (the state left the neighborhood P), NaN otherwise.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, double t, Eigen::VectorXd state, double residual, bool controller_failure,
                  Trajectory partial)
      : std::runtime_error(what), t_(t), state_(std::move(state)), residual_(residual),
        controller_failure_(controller_failure), partial_(std::move(partial)) {}
  double time() const noexcept { return t_; }
  const Eigen::VectorXd& state() const noexcept { return state_; }
  double residual() const noexcept { return residual_; }
  bool controller_failure() const noexcept { return controller_failure_; }
  const Trajectory& partial() const noexcept { return partial_; }

 private:
  double t_;
  Eigen::VectorXd state_;
  double residual_;
  bool controller_failure_;
  Trajectory partial_;
};

// Per-trajectory mutable state of a closed-loop right-hand side.
struct FeedbackCache {
  Eigen::VectorXd warm;
  double max_residual = 0.0;
  bool has_failure = false;
  double failure_residual = std::numeric_limits<double>::quiet_NaN();
};

// E' = A_H E + W(t, E).
Rhs error_dynamics_rhs(const HurwitzMatrix& hurwitz, const Perturbation& pert);
// X' = (X_2, ..., X_n, F(X, G(X)) + W(t, X)).
Rhs closed_loop_rhs(const Controller& ctrl, const Perturbation& pert, std::shared_ptr<FeedbackCache> cache);
// Same system with U = G(t, X - X_d(t)) from the tracking F-tilde.
Rhs tracking_rhs(const Controller& ctrl, const TrackingSpec& spec, const Perturbation& pert,
                 std::shared_ptr<FeedbackCache> cache);

Trajectory simulate_error_dynamics(const HurwitzMatrix& hurwitz, const Perturbation& pert, const Eigen::VectorXd& e0,
                                   double t0, double t_end, const SimulationOptions& opts = {});

// Inputs are recorded at every sample time.
Trajectory simulate_closed_loop(const Controller& ctrl, const Perturbation& pert, const Eigen::VectorXd& x0,
                                double t0, double t_end, const SimulationOptions& opts = {});

// x0 is the initial Delta; the returned states are Delta(t) = X(t) - X_d(t).
// Rejects X_d with max ||F(X_d(t), 0)|| > 1e-8 on a 201-point grid.
Trajectory simulate_tracking(const Controller& ctrl, const TrackingSpec& spec, const Perturbation& pert,
                             const Eigen::VectorXd& delta0, double t0, double t_end, const SimulationOptions& opts = {});

}  // namespace evuas
