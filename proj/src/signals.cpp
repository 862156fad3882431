#include "evuas/signals.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "evuas/errors.hpp"

namespace evuas {

std::vector<double> TimeSignal::operator()(double t) const {
  std::vector<double> out(dim, 0.0);
  eval(t, out);
  return out;
}

void TimeSignal::checked_eval(double t, std::span<double> out) const {
  eval(t, out);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i]))
      throw EvaluationError("signal is not finite at t=" + std::to_string(t), i);
  }
}

TimeSignal scaled(TimeSignal h, double c) {
  auto inner = h.eval;
  h.eval = [inner, c](double t, std::span<double> out) {
    inner(t, out);
    for (double& v : out) v *= c;
  };
  return h;
}

TimeSignal embedded(TimeSignal h, std::size_t dim, std::size_t offset) {
  if (offset + h.dim > dim) throw ShapeError("embedded signal does not fit the target dimension");
  TimeSignal out;
  out.dim = dim;
  out.freq_hint = h.freq_hint;
  out.eval = [inner = h.eval, width = h.dim, offset](double t, std::span<double> y) {
    std::fill(y.begin(), y.end(), 0.0);
    inner(t, y.subspan(offset, width));
  };
  return out;
}

namespace {

FrequencyHint exp_phase() {
  return [](double t) { return std::exp(t); };
}

// Phase t^4 has instantaneous frequency 4t^3.
FrequencyHint quartic_phase() {
  return [](double t) { return 4.0 * t * t * t; };
}

std::vector<CatalogSignal> build_catalog() {
  std::vector<CatalogSignal> c;
  c.push_back({"cos_exp", "cos(e^t): bounded, non-vanishing, diminishing",
               TimeSignal{1, [](double t, std::span<double> y) { y[0] = std::cos(std::exp(t)); },
                          exp_phase()},
               [](double t) { return 4.0 * std::exp(-t); }});
  c.push_back({"vec_cos_sin_exp", "(cos(e^t), sin(e^t)): unit-norm, diminishing",
               TimeSignal{2,
                          [](double t, std::span<double> y) {
                            const double e = std::exp(t);
                            y[0] = std::cos(e);
                            y[1] = std::sin(e);
                          },
                          exp_phase()},
               [](double t) { return std::sqrt(32.0) * std::exp(-t); }});
  c.push_back({"t_cos_t4", "t*cos(t^4): unbounded, diminishing",
               TimeSignal{1,
                          [](double t, std::span<double> y) {
                            const double t2 = t * t;
                            y[0] = t * std::cos(t2 * t2);
                          },
                          quartic_phase()},
               {}});
  c.push_back({"vec_t_cos_sin_t4", "(t*cos(t^4), t*sin(t^4)): norm t, diminishing",
               TimeSignal{2,
                          [](double t, std::span<double> y) {
                            const double t2 = t * t;
                            y[0] = t * std::cos(t2 * t2);
                            y[1] = t * std::sin(t2 * t2);
                          },
                          quartic_phase()},
               {}});
  c.push_back({"const1", "constant 1: not diminishing",
               TimeSignal{1, [](double, std::span<double> y) { y[0] = 1.0; }, {}},
               {}});
  c.push_back({"zero", "identically zero",
               TimeSignal{1, [](double, std::span<double> y) { y[0] = 0.0; }, {}},
               [](double) { return 0.0; }});
  return c;
}

}  // namespace

const std::vector<CatalogSignal>& signal_catalog() {
  static const std::vector<CatalogSignal> catalog = build_catalog();
  return catalog;
}

std::optional<CatalogSignal> find_signal(const std::string& name) {
  for (const auto& s : signal_catalog())
    if (s.name == name) return s;
  return std::nullopt;
}

}  // namespace evuas
