#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "evuas/integrator.hpp"
#include "evuas/norms.hpp"

namespace evuas {

// Simulates one trajectory from (t0, x0) up to t_end. Must be safe to call
// concurrently; any per-trajectory cache lives inside the call.
using TrajectoryFactory = std::function<Trajectory(double t0, const Eigen::VectorXd& x0, double t_end)>;

enum class Verdict { kPass, kFail, kInconclusive };
std::string to_string(Verdict v);

struct EpsRow {
  double eps = 0.0;
  double delta = 0.0;  // EvUS delta(eps); 0 when none passed
  double alpha = 0.0;  // EvUS alpha(eps)
  double T = 0.0;      // EvUA T(eps); NaN unless the EvUA bound held
  Verdict evus = Verdict::kInconclusive;
  Verdict evua = Verdict::kInconclusive;
};

struct Witness {
  std::string property;  // "evus" or "evua"
  double eps = 0.0;
  double t0 = 0.0;
  Eigen::VectorXd x0;
  double t = 0.0;
  double norm = 0.0;
};

struct SampleFailure {
  double t0 = 0.0;
  Eigen::VectorXd x0;
  std::string message;
};

struct StabilityReport {
  Verdict evus = Verdict::kInconclusive;
  Verdict evua = Verdict::kInconclusive;
  Verdict evuas = Verdict::kInconclusive;
  std::vector<EpsRow> rows;
  double delta0 = 0.0;
  double alpha0 = 0.0;  // shared EvUA start-time threshold
  double horizon = 0.0;
  std::vector<double> radius_levels;
  std::vector<double> alpha_grid;
  std::vector<double> t0_grid;
  std::size_t samples = 0;  // trajectories simulated
  std::uint64_t seed = 0;
  Norm norm = Norm::kEuclidean;
  std::vector<Witness> witnesses;
  std::vector<SampleFailure> failures;
  std::string caveat;
};

struct VerifyOptions {
  std::size_t dim = 0;
  double delta0 = 1.0;
  std::vector<double> t0_grid{0.0};
  std::vector<double> eps_levels;  // positive, strictly decreasing
  double horizon = 10.0;
  std::size_t samples = 8;         // directions per (t0, radius)
  std::uint64_t seed = 1;
  std::size_t threads = 0;         // 0: hardware concurrency
  Norm norm = Norm::kEuclidean;
  std::size_t max_witnesses = 16;
};

// Monte-Carlo evidence for eventual uniform stability and attraction.
StabilityReport verify_evuas(const TrajectoryFactory& sim, const VerifyOptions& opts);

// Replays a witness; returns the norm at the witness time.
double replay_witness(const TrajectoryFactory& sim, const Witness& w, double horizon, Norm norm);

struct KlEnvelope {
  bool accepted = false;
  double kappa = 1.0;
  double mu = 0.0;
  double fit_residual = 0.0;  // rms of the log-linear fit
  double slack = 1e-12;       // relative slack of the envelope inequality
  std::size_t points = 0;
  double max_initial_norm = 0.0;
  double max_span = 0.0;
};

// Pooled least squares of log(|x(t)|/|x0|) against t - t0 after the first
// `transient_fraction` of each trajectory's span.
KlEnvelope fit_kl_envelope(const std::vector<Trajectory>& trajectories, double transient_fraction = 0.25);

// True when |x(t)| <= kappa |x0| exp(-mu (t - t0)) (1 + slack) at every sample.
bool envelope_holds(const KlEnvelope& env, const std::vector<Trajectory>& trajectories);

struct DeltaSearchOptions {
  std::size_t directions = 16;
  int iterations = 30;
  std::uint64_t seed = 17;
  std::size_t threads = 0;
  Norm norm = Norm::kEuclidean;
};

struct DeltaEstimate {
  double delta = 0.0;
  std::vector<double> levels;
  std::vector<bool> passed;
  std::string diagnostics;
};

// Bisection on (0, eps] for the largest level whose sampled trajectories stay
// below eps and do not grow over the horizon.
DeltaEstimate estimate_delta_of_eps(const TrajectoryFactory& sim, std::size_t dim, double eps, double t0,
                                    double horizon, const DeltaSearchOptions& opts = {});

// Unit directions in R^dim from a seeded Gaussian generator.
std::vector<Eigen::VectorXd> sphere_directions(std::size_t dim, std::size_t count, std::uint64_t seed);

}  // namespace evuas
