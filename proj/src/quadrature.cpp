#include "evuas/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "evuas/errors.hpp"
#include "evuas/simd/kernels.hpp"

namespace evuas {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Period estimate per cell from sign changes of every component on a fine scan.
std::vector<double> scanned_periods(const TimeSignal& h, const std::vector<double>& cells,
                                    std::size_t* evaluations) {
  constexpr int kScanPerCell = 32;
  std::vector<double> periods(cells.size() - 1, std::numeric_limits<double>::infinity());
  std::vector<double> prev(h.dim), cur(h.dim);
  for (std::size_t c = 0; c + 1 < cells.size(); ++c) {
    const double lo = cells[c];
    const double len = cells[c + 1] - lo;
    h.checked_eval(lo, prev);
    int changes = 0;
    for (int k = 1; k <= kScanPerCell; ++k) {
      h.checked_eval(lo + len * k / kScanPerCell, cur);
      int here = 0;
      for (std::size_t i = 0; i < h.dim; ++i)
        if ((prev[i] < 0.0 && cur[i] > 0.0) || (prev[i] > 0.0 && cur[i] < 0.0)) ++here;
      if (here > 0) ++changes;
      std::swap(prev, cur);
    }
    *evaluations += kScanPerCell + 1;
    // Two sign changes per period; at the scan's Nyquist limit this saturates,
    // which is why a frequency hint is preferred for fast signals.
    if (changes > 0) periods[c] = 2.0 * len / changes;
  }
  return periods;
}

struct Panel {
  double a;
  double b;
  int depth;
};

struct PanelResult {
  std::vector<double> integral;  // component-major, dim x panels
  std::vector<double> error;     // max over components
  std::vector<double> magnitude; // max |f| at the nodes, for the roundoff floor
};

PanelResult evaluate_panels(const TimeSignal& h, const std::vector<Panel>& panels,
                            std::size_t* evaluations) {
  const std::size_t p = panels.size();
  const std::size_t dim = h.dim;
  std::vector<double> node_values(dim * simd::kGkNodes * p);
  std::vector<double> half(p);
  std::vector<double> fx(dim);
  PanelResult r;
  r.magnitude.assign(p, 0.0);
  for (std::size_t k = 0; k < p; ++k) {
    const double center = 0.5 * (panels[k].a + panels[k].b);
    half[k] = 0.5 * (panels[k].b - panels[k].a);
    for (std::size_t j = 0; j < simd::kGkNodes; ++j) {
      h.checked_eval(center + half[k] * simd::kGkAbscissae[j], fx);
      for (std::size_t c = 0; c < dim; ++c) {
        node_values[c * simd::kGkNodes * p + j * p + k] = fx[c];
        r.magnitude[k] = std::max(r.magnitude[k], std::abs(fx[c]));
      }
    }
  }
  *evaluations += simd::kGkNodes * p;
  r.integral.resize(dim * p);
  r.error.assign(p, 0.0);
  std::vector<double> err(p);
  for (std::size_t c = 0; c < dim; ++c) {
    simd::gk15_panels(std::span<const double>(node_values.data() + c * simd::kGkNodes * p,
                                              simd::kGkNodes * p),
                      half, std::span<double>(r.integral.data() + c * p, p), err);
    for (std::size_t k = 0; k < p; ++k) r.error[k] = std::max(r.error[k], err[k]);
  }
  return r;
}

}  // namespace

std::vector<double> oscillation_aware_mesh(const TimeSignal& h, double a, double b,
                                           const QuadratureOptions& opts) {
  if (!(b > a)) throw std::invalid_argument("quadrature interval must satisfy b > a");
  if (!(opts.default_step > 0.0)) throw std::invalid_argument("default_step must be positive");
  std::vector<double> cells;
  const auto ncells = static_cast<std::size_t>(std::ceil((b - a) / opts.default_step - 1e-9));
  for (std::size_t k = 0; k < ncells; ++k) cells.push_back(a + static_cast<double>(k) * opts.default_step);
  cells.push_back(b);

  std::vector<double> scan;
  if (!h.freq_hint) {
    std::size_t dummy = 0;
    scan = scanned_periods(h, cells, &dummy);
  }

  std::vector<double> mesh{a};
  for (std::size_t c = 0; c + 1 < cells.size(); ++c) {
    const double lo = cells[c];
    const double hi = cells[c + 1];
    double s = lo;
    while (s < hi) {
      double step = hi - s;
      if (h.freq_hint) {
        // The cap uses the larger frequency at either end; one refinement pass.
        for (int pass = 0; pass < 2; ++pass) {
          const double w = std::max(std::abs(h.freq_hint(s)), std::abs(h.freq_hint(s + step)));
          if (w > 0.0) step = std::min(step, kTwoPi / w / opts.panels_per_period);
        }
      } else if (std::isfinite(scan[c])) {
        step = std::min(step, scan[c] / opts.panels_per_period);
      }
      // Land exactly on the cell boundary instead of leaving a sliver.
      if (s + 1.5 * step >= hi) {
        if (s + step < hi) step = 0.5 * (hi - s);
        else step = hi - s;
      }
      s = (s + step >= hi) ? hi : s + step;
      mesh.push_back(s);
    }
  }
  return mesh;
}

CumulativeIntegral cumulative_integral(const TimeSignal& h, double a, double b,
                                       const QuadratureOptions& opts) {
  if (!(opts.abs_tol > 0.0)) throw std::invalid_argument("quadrature tolerance must be positive");
  if (h.dim == 0) throw ShapeError("signal dimension must be positive");
  const std::vector<double> mesh = oscillation_aware_mesh(h, a, b, opts);

  const std::size_t dim = h.dim;
  const double total_len = b - a;
  constexpr double kEps = std::numeric_limits<double>::epsilon();

  std::vector<Panel> done;
  std::vector<double> done_integral;  // row per panel: dim values
  std::vector<double> done_error;

  std::vector<Panel> pending;
  pending.reserve(mesh.size() - 1);
  for (std::size_t k = 0; k + 1 < mesh.size(); ++k) pending.push_back({mesh[k], mesh[k + 1], 0});

  std::size_t evaluations = 0;
  double best_error = 0.0;
  bool converged = true;

  // Accepted panels are tagged with their left end; the final assembly sorts.
  while (!pending.empty()) {
    if (evaluations + simd::kGkNodes * pending.size() > opts.max_evaluations) {
      converged = false;
      // Accept what is pending with its current estimate for the best-effort report.
      const PanelResult r = evaluate_panels(h, pending, &evaluations);
      for (std::size_t k = 0; k < pending.size(); ++k) {
        done.push_back(pending[k]);
        for (std::size_t c = 0; c < dim; ++c) done_integral.push_back(r.integral[c * pending.size() + k]);
        done_error.push_back(r.error[k]);
      }
      break;
    }
    const PanelResult r = evaluate_panels(h, pending, &evaluations);
    std::vector<Panel> next;
    for (std::size_t k = 0; k < pending.size(); ++k) {
      const Panel& pn = pending[k];
      const double len = pn.b - pn.a;
      const double local_tol = opts.abs_tol * len / total_len;
      const double roundoff = 64.0 * kEps * len * r.magnitude[k];
      const double mid = 0.5 * (pn.a + pn.b);
      const bool splittable = pn.depth < opts.max_depth && mid > pn.a && mid < pn.b;
      if (r.error[k] <= std::max(local_tol, roundoff) || !splittable) {
        if (r.error[k] > std::max(local_tol, roundoff)) converged = false;
        done.push_back(pn);
        for (std::size_t c = 0; c < dim; ++c) done_integral.push_back(r.integral[c * pending.size() + k]);
        done_error.push_back(r.error[k]);
      } else {
        next.push_back({pn.a, mid, pn.depth + 1});
        next.push_back({mid, pn.b, pn.depth + 1});
      }
    }
    pending = std::move(next);
  }

  std::vector<std::size_t> order(done.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return done[x].a < done[y].a; });

  CumulativeIntegral out;
  out.dim = dim;
  out.evaluations = evaluations;
  const std::size_t np = done.size() + 1;
  out.nodes.resize(np);
  out.values.assign(dim * np, 0.0);
  out.nodes[0] = a;
  std::vector<double> running(dim, 0.0);
  for (std::size_t i = 0; i < done.size(); ++i) {
    const std::size_t k = order[i];
    out.nodes[i + 1] = done[k].b;
    for (std::size_t c = 0; c < dim; ++c) {
      running[c] += done_integral[k * dim + c];
      out.values[c * np + i + 1] = running[c];
    }
    best_error += done_error[k];
  }
  out.error_bound = best_error;
  if (!converged) {
    throw BudgetExceeded("quadrature on [" + std::to_string(a) + ", " + std::to_string(b) +
                             "] did not reach tolerance within the evaluation budget",
                         std::sqrt(simd::sum_squares(running)), best_error);
  }
  return out;
}

std::vector<double> integrate(const TimeSignal& h, double a, double b, const QuadratureOptions& opts,
                              double* error_bound) {
  const CumulativeIntegral ci = cumulative_integral(h, a, b, opts);
  std::vector<double> total(ci.dim);
  for (std::size_t c = 0; c < ci.dim; ++c) total[c] = ci.at(c, ci.size() - 1);
  if (error_bound) *error_bound = ci.error_bound;
  return total;
}

}  // namespace evuas
