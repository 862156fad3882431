#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "evuas/norms.hpp"
#include "evuas/perturbation.hpp"
#include "evuas/quadrature.hpp"
#include "evuas/signals.hpp"

namespace evuas {

struct WindowSupOptions {
  double quad_tol = 1e-10;
  Norm norm = Norm::kEuclidean;
  // Running integral is tabulated on at least this many uniform lambda points.
  std::size_t lambda_points = 256;
  double golden_tol = 1e-8;
  // Local maxima of the tabulated profile that get a golden-section pass.
  std::size_t max_refinements = 512;
  QuadratureOptions quadrature{};
};

struct WindowSup {
  double value = 0.0;
  double lambda = 0.0;       // argmax in [0, 1]
  double quad_error = 0.0;   // quadrature error bound over the window
  std::size_t evaluations = 0;
};

// sup over lambda in [0, 1] of |int_t^{t+lambda} h|. Throws BudgetExceeded.
WindowSup window_integral_sup(const TimeSignal& h, double t, const WindowSupOptions& opts = {});

enum class Evidence { kSupported, kRefuted, kInconclusive };
std::string to_string(Evidence e);

struct WindowMetricProfile {
  std::vector<double> t_grid;
  std::vector<double> values;
  std::vector<double> quad_errors;
  std::vector<bool> partial;   // true where quadrature hit its budget
  double quad_tol = 0.0;
  Norm norm = Norm::kEuclidean;
  Evidence trend = Evidence::kInconclusive;

  bool is_partial() const;
};

// Trend verdict used by diminishing_profile (exposed for tests).
Evidence decreasing_trend(const std::vector<double>& t_grid, const std::vector<double>& values);

WindowMetricProfile diminishing_profile(const TimeSignal& h, const std::vector<double>& t_grid,
                                        const WindowSupOptions& opts = {}, std::size_t threads = 0);

enum class TriState { kYes, kNo, kUnknown };
std::string to_string(TriState s);

struct PerturbationClassification {
  TriState vanishing_at_x0 = TriState::kUnknown;
  TriState vanishing_at_tinf = TriState::kUnknown;
  Evidence diminishing_evidence = Evidence::kInconclusive;
  std::vector<WindowMetricProfile> column_profiles;
  bool bounded_on_window = true;
  double sampled_sup = 0.0;
  // Sup of |W| over each tail window [t_h/2^(j+1), t_h/2^j], latest first.
  std::vector<double> tail_sups;
  // Profiles stop early when a window would exceed the quadrature budget.
  bool profile_truncated = false;
};

struct ClassifyOptions {
  std::size_t samples_per_window = 4096;
  std::size_t tail_windows = 5;
  std::size_t ball_points = 8;
  std::uint64_t seed = 7;
  WindowSupOptions window{};
  std::size_t threads = 0;
};

// `state_dim` is the length of the X argument of W (mn, or m for error dynamics).
PerturbationClassification classify(const Perturbation& pert, std::size_t state_dim,
                                    double probe_radius, double t_horizon,
                                    const ClassifyOptions& opts = {});

}  // namespace evuas
