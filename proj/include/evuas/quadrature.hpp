#pragma once

#include <cstddef>
#include <vector>

#include "evuas/signals.hpp"

namespace evuas {

struct QuadratureOptions {
  // Absolute tolerance for the whole interval; split across panels by length.
  double abs_tol = 1e-10;
  // Upper bound on the initial panel width. Panel boundaries always include
  // the uniform grid a + k * default_step.
  double default_step = 1.0 / 256.0;
  // Initial panels are at most one local period / panels_per_period wide.
  double panels_per_period = 8.0;
  std::size_t max_evaluations = 40'000'000;
  int max_depth = 40;
};

// Running integral of a vector signal sampled at panel boundaries.
struct CumulativeIntegral {
  std::size_t dim = 0;
  std::vector<double> nodes;   // a = nodes[0] < ... < nodes.back() = b
  std::vector<double> values;  // component-major: values[c * nodes.size() + k]
  double error_bound = 0.0;
  std::size_t evaluations = 0;

  std::size_t size() const noexcept { return nodes.size(); }
  double at(std::size_t component, std::size_t k) const { return values[component * nodes.size() + k]; }
};

// Adaptive Gauss-Kronrod 7-15 over an oscillation-aware initial mesh. The
// local period comes from h.freq_hint when present, else from a
// sign-change scan. Throws BudgetExceeded when the tolerance cannot be met.
CumulativeIntegral cumulative_integral(const TimeSignal& h, double a, double b,
                                       const QuadratureOptions& opts = {});

std::vector<double> integrate(const TimeSignal& h, double a, double b,
                              const QuadratureOptions& opts = {}, double* error_bound = nullptr);

// Initial mesh used by cumulative_integral (exposed for tests).
std::vector<double> oscillation_aware_mesh(const TimeSignal& h, double a, double b,
                                           const QuadratureOptions& opts);

}  // namespace evuas
