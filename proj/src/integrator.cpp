#include "evuas/integrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>

#include "evuas/simd/kernels.hpp"

namespace evuas {

namespace {

// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr std::array<double, 1> a2{1.0 / 5};
constexpr std::array<double, 2> a3{3.0 / 40, 9.0 / 40};
constexpr std::array<double, 3> a4{44.0 / 45, -56.0 / 15, 32.0 / 9};
constexpr std::array<double, 4> a5{19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729};
constexpr std::array<double, 5> a6{9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656};
// Weights of the 5th-order solution (k2 weight is zero and dropped).
constexpr std::array<double, 5> b{35.0 / 384, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84};
// Difference between the 5th- and 4th-order weights, over k1,k3,k4,k5,k6,k7.
constexpr std::array<double, 6> e{71.0 / 57600, -71.0 / 16695, 71.0 / 1920, -17253.0 / 339200, 22.0 / 525, -1.0 / 40};
// Continuous extension, over k1,k3,k4,k5,k6,k7.
constexpr std::array<double, 6> d{-12715105075.0 / 11282082432, 87487479700.0 / 32700410799,
                                  -10690763975.0 / 1880347072,  701980252875.0 / 199316789632,
                                  -1453857185.0 / 822651844,    69997945.0 / 29380423};

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 5.0;

std::span<double> span_of(Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> cspan_of(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

template <std::size_t N>
void combine(Eigen::VectorXd& out, const Eigen::VectorXd& y, double h, const std::array<double, N>& coeffs,
             const std::array<const double*, N>& stages) {
  simd::stage_combine(span_of(out), cspan_of(y), h, coeffs, stages);
}

double rms_scaled(const Eigen::VectorXd& v, const Eigen::VectorXd& y, double tol) {
  return simd::scaled_rms(cspan_of(v), cspan_of(y), cspan_of(y), tol, tol);
}

}  // namespace

std::string to_string(IntegrationError::Kind kind) {
  switch (kind) {
    case IntegrationError::Kind::kMinStep:
      return "min-step underflow";
    case IntegrationError::Kind::kNonFinite:
      return "non-finite state";
    case IntegrationError::Kind::kRhsFailure:
      return "right-hand side failure";
    case IntegrationError::Kind::kStepBudget:
      return "step budget exhausted";
  }
  return "unknown";
}

double Trajectory::state_norm(std::size_t k) const { return vector_norm(cspan_of(states.at(k)), norm); }

std::vector<double> Trajectory::state_norms() const {
  std::vector<double> out(states.size());
  if (states.empty()) return out;
  const auto dim = static_cast<std::size_t>(states.front().size());
  std::vector<double> soa(dim * states.size());
  for (std::size_t p = 0; p < states.size(); ++p)
    for (std::size_t c = 0; c < dim; ++c) soa[c * states.size() + p] = states[p][static_cast<Eigen::Index>(c)];
  if (norm == Norm::kInf)
    simd::soa_inf_norms(soa, dim, out);
  else
    simd::soa_euclidean_norms(soa, dim, out);
  return out;
}

double Trajectory::sup_norm_after(double t_from) const {
  double sup = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k)
    if (times[k] >= t_from) sup = std::max(sup, state_norm(k));
  return sup;
}

void Trajectory::check_invariants() const {
  if (times.size() != states.size()) throw std::logic_error("trajectory times and states differ in length");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (k > 0 && !(times[k] > times[k - 1])) throw std::logic_error("trajectory times must increase strictly");
    if (!states[k].allFinite()) throw std::logic_error("trajectory state is not finite");
  }
}

std::vector<double> uniform_samples(double t0, double t_end, std::size_t n) {
  std::vector<double> out(n + 1);
  for (std::size_t k = 0; k <= n; ++k)
    out[k] = k == n ? t_end : t0 + (t_end - t0) * static_cast<double>(k) / static_cast<double>(n);
  return out;
}

Trajectory integrate(const Rhs& rhs, double t0, const Eigen::VectorXd& x0, double t_end,
                     const IntegratorOptions& opts) {
  if (!(t_end > t0)) throw std::invalid_argument("integrate requires t_end > t0");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("integrate requires tol > 0");
  if (!x0.allFinite()) throw std::invalid_argument("initial state is not finite");
  for (std::size_t k = 1; k < opts.sample_times.size(); ++k)
    if (!(opts.sample_times[k] > opts.sample_times[k - 1]))
      throw std::invalid_argument("sample times must increase strictly");

  const Eigen::Index dim = x0.size();
  const double tol = opts.tol;

  Trajectory traj;
  traj.norm = opts.norm;
  traj.times.push_back(t0);
  traj.states.push_back(x0);
  auto& diag = traj.diagnostics;

  std::size_t next_sample = 0;
  while (next_sample < opts.sample_times.size() && opts.sample_times[next_sample] <= t0) ++next_sample;
  const bool dense = !opts.sample_times.empty();

  Eigen::VectorXd y = x0, y1(dim), ytmp(dim), err(dim), zero = Eigen::VectorXd::Zero(dim);
  std::array<Eigen::VectorXd, 7> k;
  for (auto& v : k) v.resize(dim);
  std::array<Eigen::VectorXd, 5> r;
  for (auto& v : r) v.resize(dim);

  double t = t0;
  auto call = [&](double tt, const Eigen::VectorXd& xx, Eigen::VectorXd& out) {
    ++diag.rhs_evaluations;
    try {
      rhs(tt, xx, out);
    } catch (const std::exception& ex) {
      throw IntegrationError(IntegrationError::Kind::kRhsFailure,
                             std::string("right-hand side failed at t=") + std::to_string(tt) + ": " + ex.what(), tt,
                             xx, traj);
    }
  };

  auto step_cap = [&](double tt) {
    double cap = opts.max_step;
    if (opts.freq_hint) {
      const double w = opts.freq_hint(tt);
      if (w > 0.0 && std::isfinite(w)) cap = std::min(cap, 2.0 * std::numbers::pi / w / opts.steps_per_period);
    }
    return cap;
  };

  call(t, y, k[0]);

  double h = opts.initial_step;
  if (!(h > 0.0)) {
    const double d0 = rms_scaled(y, y, tol);
    const double d1 = rms_scaled(k[0], y, tol);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min({h0, t_end - t0, step_cap(t)});
    ytmp = y + h0 * k[0];
    call(t + h0, ytmp, k[1]);
    err = k[1] - k[0];
    const double d2 = rms_scaled(err, y, tol) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    h = std::min(100.0 * h0, h1);
  }

  bool last_rejected = false;
  while (t < t_end) {
    if (diag.accepted_steps + diag.rejected_steps >= opts.max_steps)
      throw IntegrationError(IntegrationError::Kind::kStepBudget, "integrator step budget exhausted at t=" + std::to_string(t), t,
                             y, traj);
    h = std::min(h, step_cap(t));
    h = std::min(h, step_cap(t + h));
    const double h_min = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
    if (h < h_min)
      throw IntegrationError(IntegrationError::Kind::kMinStep,
                             "step size underflow at t=" + std::to_string(t), t, y, traj);
    bool final_step = false;
    if (t + h >= t_end || t + 1.0001 * h >= t_end) {
      h = t_end - t;
      final_step = true;
    }

    combine<1>(ytmp, y, h, a2, {k[0].data()});
    call(t + c2 * h, ytmp, k[1]);
    combine<2>(ytmp, y, h, a3, {k[0].data(), k[1].data()});
    call(t + c3 * h, ytmp, k[2]);
    combine<3>(ytmp, y, h, a4, {k[0].data(), k[1].data(), k[2].data()});
    call(t + c4 * h, ytmp, k[3]);
    combine<4>(ytmp, y, h, a5, {k[0].data(), k[1].data(), k[2].data(), k[3].data()});
    call(t + c5 * h, ytmp, k[4]);
    combine<5>(ytmp, y, h, a6, {k[0].data(), k[1].data(), k[2].data(), k[3].data(), k[4].data()});
    const double t_new = final_step ? t_end : t + h;
    call(t_new, ytmp, k[5]);
    combine<5>(y1, y, h, b, {k[0].data(), k[2].data(), k[3].data(), k[4].data(), k[5].data()});
    call(t_new, y1, k[6]);
    combine<6>(err, zero, h, e, {k[0].data(), k[2].data(), k[3].data(), k[4].data(), k[5].data(), k[6].data()});

    const double en = simd::scaled_rms(cspan_of(err), cspan_of(y), cspan_of(y1), tol, tol);
    if (!std::isfinite(en) || !y1.allFinite()) {
      ++diag.rejected_steps;
      last_rejected = true;
      h *= kMinFactor;
      if (h < h_min)
        throw IntegrationError(IntegrationError::Kind::kNonFinite,
                               "state became non-finite at t=" + std::to_string(t), t, y, traj);
      continue;
    }
    double fac = en == 0.0 ? kMaxFactor : kSafety * std::pow(en, -0.2);
    fac = std::clamp(fac, kMinFactor, kMaxFactor);
    if (en > 1.0) {
      ++diag.rejected_steps;
      last_rejected = true;
      h *= std::min(1.0, fac);
      continue;
    }

    ++diag.accepted_steps;
    diag.min_step = std::min(diag.min_step, h);
    diag.max_step = std::max(diag.max_step, h);

    if (dense) {
      if (next_sample < opts.sample_times.size() && opts.sample_times[next_sample] <= t_new) {
        r[0] = y1 - y;                       // ydiff
        r[1] = h * k[0] - r[0];              // bspl
        r[2] = r[0] - h * k[6] - r[1];
        combine<6>(r[3], zero, h, d, {k[0].data(), k[2].data(), k[3].data(), k[4].data(), k[5].data(), k[6].data()});
        while (next_sample < opts.sample_times.size() && opts.sample_times[next_sample] <= t_new) {
          const double s = opts.sample_times[next_sample++];
          if (s == t_new) {
            traj.times.push_back(s);
            traj.states.push_back(y1);
            continue;
          }
          const double th = (s - t) / h;
          const double th1 = 1.0 - th;
          traj.times.push_back(s);
          traj.states.push_back(y + th * (r[0] + th1 * (r[1] + th * (r[2] + th1 * r[3]))));
        }
      }
    } else {
      traj.times.push_back(t_new);
      traj.states.push_back(y1);
    }

    t = t_new;
    y.swap(y1);
    k[0].swap(k[6]);
    if (last_rejected) fac = std::min(fac, 1.0);
    last_rejected = false;
    h *= fac;
  }
  return traj;
}

}  // namespace evuas
