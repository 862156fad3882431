#include "evuas/diminishing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>

#include "evuas/errors.hpp"
#include "evuas/simd/kernels.hpp"
#include "parallel.hpp"

namespace evuas {

std::string to_string(Evidence e) {
  switch (e) {
    case Evidence::kSupported:
      return "supported";
    case Evidence::kRefuted:
      return "refuted";
    case Evidence::kInconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

std::string to_string(TriState s) {
  switch (s) {
    case TriState::kYes:
      return "yes";
    case TriState::kNo:
      return "no";
    case TriState::kUnknown:
      return "unknown";
  }
  return "unknown";
}

bool WindowMetricProfile::is_partial() const {
  return std::any_of(partial.begin(), partial.end(), [](bool p) { return p; });
}

namespace {

std::vector<double> norms_of(const CumulativeIntegral& ci, Norm norm) {
  std::vector<double> out(ci.size());
  if (norm == Norm::kInf)
    simd::soa_inf_norms(ci.values, ci.dim, out);
  else
    simd::soa_euclidean_norms(ci.values, ci.dim, out);
  return out;
}

}  // namespace

WindowSup window_integral_sup(const TimeSignal& h, double t, const WindowSupOptions& opts) {
  if (!(opts.quad_tol > 0.0)) throw std::invalid_argument("quad_tol must be positive");
  if (opts.lambda_points < 2) throw std::invalid_argument("lambda grid needs at least 2 points");
  QuadratureOptions q = opts.quadrature;
  q.abs_tol = opts.quad_tol;
  q.default_step = 1.0 / static_cast<double>(opts.lambda_points);

  const CumulativeIntegral ci = cumulative_integral(h, t, t + 1.0, q);
  const std::vector<double> norms = norms_of(ci, opts.norm);
  const auto it = std::max_element(norms.begin(), norms.end());
  const std::size_t k = static_cast<std::size_t>(it - norms.begin());

  WindowSup out;
  out.value = *it;
  out.lambda = ci.nodes[k] - t;
  out.quad_error = ci.error_bound;
  out.evaluations = ci.evaluations;

  // Golden-section refinement around every tabulated local maximum that is
  // close to the best one; on fast oscillations the true peak can sit on a
  // neighbouring lobe.
  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < norms.size(); ++i) {
    const bool up = i == 0 || norms[i] >= norms[i - 1];
    const bool down = i + 1 == norms.size() || norms[i] >= norms[i + 1];
    if (up && down && norms[i] >= 0.85 * out.value) peaks.push_back(i);
  }
  std::sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });
  if (peaks.size() > opts.max_refinements) peaks.resize(opts.max_refinements);

  std::vector<double> base(ci.dim);
  std::vector<double> y(ci.dim);
  for (const std::size_t p : peaks) {
    const std::size_t left = p > 0 ? p - 1 : 0;
    const std::size_t right = std::min(p + 1, ci.size() - 1);
    if (right == left) continue;
    const double base_t = ci.nodes[left];
    for (std::size_t c = 0; c < ci.dim; ++c) base[c] = ci.at(c, left);

    QuadratureOptions local = q;
    local.default_step = ci.nodes[right] - base_t;
    local.abs_tol = std::max(opts.quad_tol * local.default_step, 1e-300);
    auto running_norm = [&](double s) {
      if (s <= base_t) return vector_norm(base, opts.norm);
      const std::vector<double> part = integrate(h, base_t, s, local);
      out.evaluations += simd::kGkNodes;
      for (std::size_t c = 0; c < ci.dim; ++c) y[c] = base[c] + part[c];
      return vector_norm(y, opts.norm);
    };

    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = base_t;
    double b = ci.nodes[right];
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = running_norm(c);
    double fd = running_norm(d);
    while (b - a > opts.golden_tol) {
      if (fc > fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - invphi * (b - a);
        fc = running_norm(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + invphi * (b - a);
        fd = running_norm(d);
      }
    }
    const double s_best = fc > fd ? c : d;
    const double f_best = std::max(fc, fd);
    if (f_best > out.value) {
      out.value = f_best;
      out.lambda = s_best - t;
    }
  }
  return out;
}

Evidence decreasing_trend(const std::vector<double>& t_grid, const std::vector<double>& values) {
  if (t_grid.size() != values.size()) throw ShapeError("profile grid and values differ in length");
  if (values.empty()) return Evidence::kInconclusive;
  const double peak = *std::max_element(values.begin(), values.end());
  if (peak <= 1e-14) return Evidence::kSupported;

  // Bucket maxima M_k over [k, k+1), compared against the reference bucket
  // k_ref = max(2, floor(t_first)).
  std::map<long, double> buckets;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const long k = static_cast<long>(std::floor(t_grid[i]));
    auto [pos, inserted] = buckets.emplace(k, values[i]);
    if (!inserted) pos->second = std::max(pos->second, values[i]);
  }
  const long k_ref = std::max(2L, static_cast<long>(std::floor(t_grid.front())));
  constexpr double kDecaySlack = 1.1;
  bool bounded_by_ref = true;
  auto ref = buckets.find(k_ref);
  if (ref == buckets.end()) {
    ref = buckets.lower_bound(k_ref);
  }
  if (ref != buckets.end()) {
    for (auto it = ref; it != buckets.end(); ++it)
      if (it->second > ref->second * kDecaySlack) bounded_by_ref = false;
  }
  const double first = values.front();
  const double last = values.back();
  const bool decayed = last <= 0.2 * first;
  if (bounded_by_ref && decayed && values.size() >= 2) return Evidence::kSupported;
  if (last >= 0.9 * first) return Evidence::kRefuted;
  return Evidence::kInconclusive;
}

WindowMetricProfile diminishing_profile(const TimeSignal& h, const std::vector<double>& t_grid,
                                        const WindowSupOptions& opts, std::size_t threads) {
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw std::invalid_argument("profile grid must be increasing");
  WindowMetricProfile p;
  p.t_grid = t_grid;
  p.quad_tol = opts.quad_tol;
  p.norm = opts.norm;
  const std::size_t n = t_grid.size();
  p.values.assign(n, 0.0);
  p.quad_errors.assign(n, 0.0);
  p.partial.assign(n, false);
  std::vector<char> partial(n, 0);
  detail::parallel_for(n, threads, [&](std::size_t i) {
    try {
      const WindowSup w = window_integral_sup(h, t_grid[i], opts);
      p.values[i] = w.value;
      p.quad_errors[i] = w.quad_error;
    } catch (const BudgetExceeded& e) {
      p.values[i] = e.best_estimate();
      p.quad_errors[i] = e.error_bound();
      partial[i] = 1;
    }
  });
  for (std::size_t i = 0; i < n; ++i) p.partial[i] = partial[i] != 0;
  p.trend = decreasing_trend(p.t_grid, p.values);
  if (p.is_partial() && p.trend == Evidence::kSupported) p.trend = Evidence::kInconclusive;
  return p;
}

namespace {

// Panels needed for one unit window starting at t, from the frequency hint.
double estimated_window_evaluations(const TimeSignal& h, double t, const WindowSupOptions& opts) {
  if (!h.freq_hint) return 0.0;
  const double w = std::max(std::abs(h.freq_hint(t)), std::abs(h.freq_hint(t + 1.0)));
  const double panels = std::max(static_cast<double>(opts.lambda_points),
                                 w / (2.0 * std::numbers::pi) * opts.quadrature.panels_per_period);
  return panels * static_cast<double>(simd::kGkNodes);
}

}  // namespace

PerturbationClassification classify(const Perturbation& pert, std::size_t state_dim,
                                    double probe_radius, double t_horizon,
                                    const ClassifyOptions& opts) {
  if (!(t_horizon > 0.0)) throw std::invalid_argument("t_horizon must be positive");
  if (!(probe_radius >= 0.0)) throw std::invalid_argument("probe_radius must be nonnegative");
  PerturbationClassification out;
  const auto d = static_cast<Eigen::Index>(state_dim);

  // Probe states: origin, +-r e_i, and seeded points inside the closed ball.
  std::vector<Eigen::VectorXd> probes;
  probes.push_back(Eigen::VectorXd::Zero(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
    e[i] = probe_radius;
    probes.push_back(e);
    probes.push_back(-e);
  }
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t k = 0; k < opts.ball_points && d > 0; ++k) {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = gauss(rng);
    const double r = probe_radius * std::pow(unif(rng), 1.0 / static_cast<double>(d));
    if (v.norm() > 0.0) v *= r / v.norm();
    probes.push_back(v);
  }

  // Tail windows, latest first, then the initial segment [0, t_h / 2^J].
  std::vector<std::pair<double, double>> windows;
  for (std::size_t j = 0; j < opts.tail_windows; ++j) {
    const double hi = t_horizon / std::pow(2.0, static_cast<double>(j));
    windows.emplace_back(hi / 2.0, hi);
  }
  windows.emplace_back(0.0, t_horizon / std::pow(2.0, static_cast<double>(opts.tail_windows)));

  std::vector<double> sup_ball(windows.size(), 0.0);
  std::vector<double> sup_origin(windows.size(), 0.0);
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const auto [lo, hi] = windows[w];
    const double width = (hi - lo) / static_cast<double>(opts.samples_per_window);
    for (std::size_t i = 0; i < opts.samples_per_window; ++i) {
      const double t = lo + (static_cast<double>(i) + unif(rng)) * width;
      for (std::size_t p = 0; p < probes.size(); ++p) {
        const double v = pert.evaluate(t, probes[p]).norm();
        sup_ball[w] = std::max(sup_ball[w], v);
        if (p == 0) sup_origin[w] = std::max(sup_origin[w], v);
      }
    }
  }
  out.tail_sups.assign(sup_ball.begin(), sup_ball.begin() + static_cast<long>(opts.tail_windows));
  out.sampled_sup = *std::max_element(sup_ball.begin(), sup_ball.end());

  if (sup_origin[0] <= 1e-12)
    out.vanishing_at_x0 = TriState::kYes;
  else if (sup_origin[0] >= 1e-6)
    out.vanishing_at_x0 = TriState::kNo;

  const std::vector<double>& s = out.tail_sups;
  if (s.size() >= 2) {
    const bool decreasing = std::is_sorted(s.begin(), s.end());
    if (s[0] <= 1e-12 || (decreasing && s[0] <= 1e-3 * s.back()))
      out.vanishing_at_tinf = TriState::kYes;
    else if (s[0] > 1e-6 && s[0] >= 0.5 * s[1])
      out.vanishing_at_tinf = TriState::kNo;
  }
  if (s.size() >= 3) out.bounded_on_window = !(s[0] >= 1.5 * s[1] && s[1] >= 1.5 * s[2]);

  // Diminishing evidence from the unit-window profile of every column of D.
  std::vector<double> grid;
  const double budget = static_cast<double>(opts.window.quadrature.max_evaluations) / 4.0;
  bool truncated = false;
  Evidence overall = Evidence::kSupported;
  for (std::size_t j = 0; j < pert.column_count(); ++j) {
    const TimeSignal col = pert.column(j);
    grid.clear();
    for (double t = 0.0; t + 1.0 <= t_horizon + 1e-12; t += 1.0) {
      if (estimated_window_evaluations(col, t, opts.window) > budget) {
        truncated = true;
        break;
      }
      grid.push_back(t);
    }
    if (grid.size() < 3) {
      overall = overall == Evidence::kRefuted ? overall : Evidence::kInconclusive;
      continue;
    }
    WindowMetricProfile prof = diminishing_profile(col, grid, opts.window, opts.threads);
    if (prof.trend == Evidence::kRefuted)
      overall = Evidence::kRefuted;
    else if (prof.trend == Evidence::kInconclusive && overall != Evidence::kRefuted)
      overall = Evidence::kInconclusive;
    out.column_profiles.push_back(std::move(prof));
  }
  out.profile_truncated = truncated;
  out.diminishing_evidence = overall;
  return out;
}

}  // namespace evuas
