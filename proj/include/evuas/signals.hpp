#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace evuas {

// Local angular frequency (rad per unit time) of the fastest oscillation at t.
using FrequencyHint = std::function<double(double t)>;

// A vector-valued signal h: [0, inf) -> R^dim.
struct TimeSignal {
  std::size_t dim = 1;
  std::function<void(double t, std::span<double> out)> eval;
  FrequencyHint freq_hint;

  std::vector<double> operator()(double t) const;
  // Throws EvaluationError on NaN/Inf output.
  void checked_eval(double t, std::span<double> out) const;
};

TimeSignal scaled(TimeSignal h, double c);
// Embeds a signal in R^dim starting at component `offset` (zero elsewhere).
TimeSignal embedded(TimeSignal h, std::size_t dim, std::size_t offset);

struct CatalogSignal {
  std::string name;
  std::string description;
  TimeSignal signal;
  // Known upper bound of the windowed-integral metric, when available.
  std::function<double(double t)> analytic_bound;
};

// "cos_exp", "vec_cos_sin_exp", "t_cos_t4", "vec_t_cos_sin_t4", "const1", "zero".
const std::vector<CatalogSignal>& signal_catalog();
std::optional<CatalogSignal> find_signal(const std::string& name);

}  // namespace evuas
