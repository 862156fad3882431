#include "evuas/simulator.hpp"

#include <cmath>

#include "evuas/errors.hpp"

namespace evuas {

namespace {

IntegratorOptions integrator_options(const SimulationOptions& opts, const Perturbation& pert) {
  IntegratorOptions io;
  io.tol = opts.tol;
  io.sample_times = opts.sample_times;
  io.max_step = opts.max_step;
  io.freq_hint = opts.freq_hint ? opts.freq_hint : pert.freq_hint();
  io.max_steps = opts.max_steps;
  io.norm = opts.norm;
  return io;
}

void check_perturbation_dim(const Perturbation& pert, std::size_t m) {
  if (pert.dim() != m)
    throw ShapeError("perturbation dimension " + std::to_string(pert.dim()) + " does not match m = " +
                     std::to_string(m));
}

// Runs the integrator and turns its failure into a SimulationError,
// attributing right-hand-side failures to the controller when it failed.
Trajectory run(const Rhs& rhs, double t0, const Eigen::VectorXd& x0, double t_end, const IntegratorOptions& io,
               const FeedbackCache* cache) {
  try {
    return integrate(rhs, t0, x0, t_end, io);
  } catch (const IntegrationError& e) {
    const bool ctrl = cache && cache->has_failure;
    Trajectory partial = e.partial();
    if (ctrl) partial.diagnostics.controller_failures = 1;
    const double residual = ctrl ? cache->failure_residual : std::numeric_limits<double>::quiet_NaN();
    throw SimulationError(ctrl ? std::string("controller left its validity region: ") + e.what() : e.what(), e.time(),
                          e.last_state(), residual, ctrl, std::move(partial));
  }
}

// Controller evaluation outside the integrator (initial state, recorded
// samples). Failures become SimulationErrors like those raised mid-step.
template <class Eval>
Eigen::VectorXd input_at(double t, const Eigen::VectorXd& x, Eval&& eval) {
  try {
    return eval().u;
  } catch (const ControllerError& e) {
    Trajectory partial;
    partial.times.push_back(t);
    partial.states.push_back(x);
    partial.diagnostics.controller_failures = 1;
    throw SimulationError(std::string("controller left its validity region: ") + e.what(), t, x, e.residual(), true,
                          std::move(partial));
  }
}

void record_failure(FeedbackCache& cache, const ControllerError& e) {
  cache.has_failure = true;
  cache.failure_residual = e.residual();
}

}  // namespace

Rhs error_dynamics_rhs(const HurwitzMatrix& hurwitz, const Perturbation& pert) {
  check_perturbation_dim(pert, static_cast<std::size_t>(hurwitz.a_h.rows()));
  return [a = hurwitz.a_h, pert](double t, const Eigen::VectorXd& e, Eigen::VectorXd& de) {
    de.noalias() = a * e;
    pert.accumulate(t, e, de);
  };
}

Rhs closed_loop_rhs(const Controller& ctrl, const Perturbation& pert, std::shared_ptr<FeedbackCache> cache) {
  const SystemModel& model = ctrl.model();
  check_perturbation_dim(pert, model.m());
  if (cache->warm.size() != static_cast<Eigen::Index>(model.m()))
    cache->warm = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.m()));
  return [ctrl, pert, cache](double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
    ControllerEval u;
    try {
      u = ctrl.evaluate(x, &cache->warm);
    } catch (const ControllerError& e) {
      record_failure(*cache, e);
      throw;
    }
    cache->warm = u.u;
    cache->max_residual = std::max(cache->max_residual, u.residual);
    dx = evaluate_dynamics(ctrl.model(), pert, t, x, u.u);
  };
}

Rhs tracking_rhs(const Controller& ctrl, const TrackingSpec& spec, const Perturbation& pert,
                 std::shared_ptr<FeedbackCache> cache) {
  const SystemModel& model = ctrl.model();
  check_perturbation_dim(pert, model.m());
  if (cache->warm.size() != static_cast<Eigen::Index>(model.m()))
    cache->warm = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.m()));
  return [ctrl, spec, pert, cache](double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
    const Eigen::MatrixXd xd = spec.x_d(t);
    const Eigen::VectorXd delta = x - Eigen::Map<const Eigen::VectorXd>(xd.data(), xd.size());
    ControllerEval u;
    try {
      u = ctrl.evaluate_tracking(t, delta, spec, &cache->warm);
    } catch (const ControllerError& e) {
      record_failure(*cache, e);
      throw;
    }
    cache->warm = u.u;
    cache->max_residual = std::max(cache->max_residual, u.residual);
    dx = evaluate_dynamics(ctrl.model(), pert, t, x, u.u);
  };
}

Trajectory simulate_error_dynamics(const HurwitzMatrix& hurwitz, const Perturbation& pert, const Eigen::VectorXd& e0,
                                   double t0, double t_end, const SimulationOptions& opts) {
  if (e0.size() != hurwitz.a_h.rows()) throw ShapeError("E0 must have length m");
  return run(error_dynamics_rhs(hurwitz, pert), t0, e0, t_end, integrator_options(opts, pert), nullptr);
}

Trajectory simulate_closed_loop(const Controller& ctrl, const Perturbation& pert, const Eigen::VectorXd& x0,
                                double t0, double t_end, const SimulationOptions& opts) {
  ctrl.model().check_state(x0);
  auto cache = std::make_shared<FeedbackCache>();
  // Fails early, before integration, when Newton does not converge at X0.
  cache->warm = input_at(t0, x0, [&] { return ctrl.evaluate(x0); });
  const Eigen::VectorXd u0 = cache->warm;
  Trajectory traj = run(closed_loop_rhs(ctrl, pert, cache), t0, x0, t_end, integrator_options(opts, pert), cache.get());

  Eigen::VectorXd warm = u0;
  traj.inputs.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Eigen::VectorXd& x = traj.states[k];
    warm = input_at(traj.times[k], x, [&] { return ctrl.evaluate(x, &warm); });
    traj.inputs.push_back(warm);
  }
  traj.diagnostics.max_newton_residual = cache->max_residual;
  return traj;
}

Trajectory simulate_tracking(const Controller& ctrl, const TrackingSpec& spec, const Perturbation& pert,
                             const Eigen::VectorXd& delta0, double t0, double t_end, const SimulationOptions& opts) {
  const SystemModel& model = ctrl.model();
  model.check_state(delta0);
  const double inadmissible = spec.admissibility_error(model, t0, t_end);
  if (!(inadmissible <= 1e-8))
    throw DesignError("tracking reference is not admissible: max ||F(X_d(t), 0)|| = " + std::to_string(inadmissible));

  auto xd_flat = [&spec](double t) {
    const Eigen::MatrixXd xd = spec.x_d(t);
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(xd.data(), xd.size()));
  };
  auto cache = std::make_shared<FeedbackCache>();
  cache->warm = input_at(t0, delta0, [&] { return ctrl.evaluate_tracking(t0, delta0, spec); });
  const Eigen::VectorXd u0 = cache->warm;
  const Eigen::VectorXd x0 = delta0 + xd_flat(t0);
  Trajectory traj = run(tracking_rhs(ctrl, spec, pert, cache), t0, x0, t_end, integrator_options(opts, pert), cache.get());

  Eigen::VectorXd warm = u0;
  traj.inputs.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    traj.states[k] -= xd_flat(traj.times[k]);
    warm = input_at(traj.times[k], traj.states[k],
                    [&] { return ctrl.evaluate_tracking(traj.times[k], traj.states[k], spec, &warm); });
    traj.inputs.push_back(warm);
  }
  traj.diagnostics.max_newton_residual = cache->max_residual;
  return traj;
}

}  // namespace evuas
