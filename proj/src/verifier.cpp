#include "evuas/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "parallel.hpp"

namespace evuas {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Run {
  double t0 = 0.0;
  double radius = 0.0;
  Eigen::VectorXd x0;
  bool ok = false;
  std::string error;
  std::vector<double> times;
  std::vector<double> norms;
  double sup = 0.0;
};

Run simulate(const TrajectoryFactory& sim, double t0, const Eigen::VectorXd& x0, double radius, double horizon,
             Norm norm) {
  Run r;
  r.t0 = t0;
  r.radius = radius;
  r.x0 = x0;
  try {
    Trajectory traj = sim(t0, x0, t0 + horizon);
    traj.norm = norm;
    traj.check_invariants();
    r.times = std::move(traj.times);
    r.norms = traj.state_norms();
    r.sup = *std::max_element(r.norms.begin(), r.norms.end());
    r.ok = true;
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

// Index of the last sample with norm >= eps, or npos.
std::size_t last_violation(const Run& r, double eps) {
  for (std::size_t k = r.norms.size(); k-- > 0;)
    if (r.norms[k] >= eps) return k;
  return std::string::npos;
}

// Norm still falling over the final quarter of the horizon.
bool trending_down(const Run& r) {
  const double t_end = r.times.back();
  const double from = r.t0 + 0.75 * (t_end - r.t0);
  double peak = 0.0;
  for (std::size_t k = 0; k < r.times.size(); ++k)
    if (r.times[k] >= from) peak = std::max(peak, r.norms[k]);
  return r.norms.back() < 0.9 * peak;
}

Verdict combine(const std::vector<Verdict>& vs) {
  bool inconclusive = false;
  for (Verdict v : vs) {
    if (v == Verdict::kFail) return Verdict::kFail;
    if (v == Verdict::kInconclusive) inconclusive = true;
  }
  return inconclusive ? Verdict::kInconclusive : Verdict::kPass;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kPass:
      return "pass";
    case Verdict::kFail:
      return "fail";
    case Verdict::kInconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

std::vector<Eigen::VectorXd> sphere_directions(std::size_t dim, std::size_t count, std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("direction dimension must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  while (out.size() < count) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = gauss(rng);
    const double nrm = v.norm();
    if (nrm < 1e-12) continue;
    out.push_back(v / nrm);
  }
  return out;
}

StabilityReport verify_evuas(const TrajectoryFactory& sim, const VerifyOptions& opts) {
  if (opts.dim == 0) throw std::invalid_argument("verify_evuas: dim must be positive");
  if (opts.eps_levels.empty()) throw std::invalid_argument("verify_evuas: eps_levels is empty");
  for (std::size_t i = 0; i < opts.eps_levels.size(); ++i) {
    if (!(opts.eps_levels[i] > 0.0)) throw std::invalid_argument("verify_evuas: eps levels must be positive");
    if (i > 0 && !(opts.eps_levels[i] < opts.eps_levels[i - 1]))
      throw std::invalid_argument("verify_evuas: eps levels must decrease strictly");
  }
  if (opts.samples == 0) throw std::invalid_argument("verify_evuas: samples must be >= 1");
  if (!(opts.horizon > 0.0)) throw std::invalid_argument("verify_evuas: horizon must be positive");
  if (!(opts.delta0 >= 0.0)) throw std::invalid_argument("verify_evuas: delta0 must be >= 0");
  if (opts.t0_grid.empty()) throw std::invalid_argument("verify_evuas: t0 grid is empty");

  StabilityReport rep;
  rep.delta0 = opts.delta0;
  rep.horizon = opts.horizon;
  rep.seed = opts.seed;
  rep.norm = opts.norm;
  rep.t0_grid = opts.t0_grid;
  std::sort(rep.t0_grid.begin(), rep.t0_grid.end());
  rep.t0_grid.erase(std::unique(rep.t0_grid.begin(), rep.t0_grid.end()), rep.t0_grid.end());
  rep.caveat =
      "Sampled evidence only: the definitions quantify over every start time beyond alpha and every initial "
      "state in the ball, while this report covers the listed start times, radii and directions.";

  // Sphere radii delta0, delta0/2, delta0/4, continued below the smallest eps.
  const double eps_min = opts.eps_levels.back();
  if (opts.delta0 == 0.0) {
    rep.radius_levels = {0.0};
  } else {
    for (double r = opts.delta0; rep.radius_levels.size() < 3 || (r >= 0.5 * eps_min && rep.radius_levels.size() < 40);
         r *= 0.5)
      rep.radius_levels.push_back(r);
    if (rep.radius_levels.back() >= 0.5 * eps_min) rep.radius_levels.push_back(rep.radius_levels.back() * 0.5);
  }
  rep.alpha_grid = {0.0};
  for (double a = 1.0; a <= 0.5 * opts.horizon && a <= rep.t0_grid.back(); a *= 2.0) rep.alpha_grid.push_back(a);

  const auto dirs = sphere_directions(opts.dim, opts.samples, opts.seed);
  struct Job {
    double t0;
    std::size_t level;
    Eigen::VectorXd x0;
  };
  std::vector<Job> jobs;
  for (double t0 : rep.t0_grid)
    for (std::size_t l = 0; l < rep.radius_levels.size(); ++l) {
      const double r = rep.radius_levels[l];
      if (r == 0.0) {
        jobs.push_back({t0, l, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(opts.dim))});
        continue;
      }
      for (const auto& d : dirs) jobs.push_back({t0, l, r * d});
    }
  std::vector<Run> runs(jobs.size());
  detail::parallel_for(jobs.size(), opts.threads, [&](std::size_t i) {
    runs[i] = simulate(sim, jobs[i].t0, jobs[i].x0, rep.radius_levels[jobs[i].level], opts.horizon, opts.norm);
  });
  rep.samples = runs.size();
  for (const Run& r : runs)
    if (!r.ok) rep.failures.push_back({r.t0, r.x0, r.error});

  auto add_witness = [&](const char* prop, double eps, const Run& r, std::size_t k) {
    if (rep.witnesses.size() >= opts.max_witnesses) return;
    rep.witnesses.push_back({prop, eps, r.t0, r.x0, r.times[k], r.norms[k]});
  };

  // EvUS: largest radius first, then the smallest alpha.
  std::vector<Verdict> evus_verdicts;
  for (double eps : opts.eps_levels) {
    EpsRow row;
    row.eps = eps;
    row.T = kNaN;
    bool found = false;
    for (std::size_t l = 0; l < rep.radius_levels.size() && !found; ++l) {
      for (double alpha : rep.alpha_grid) {
        bool ok = true;
        for (const Run& r : runs) {
          if (!r.ok || r.t0 < alpha || r.radius > rep.radius_levels[l]) continue;
          if (!(r.sup < eps)) {
            ok = false;
            break;
          }
        }
        if (ok) {
          row.delta = rep.radius_levels[l];
          row.alpha = alpha;
          found = true;
          break;
        }
      }
    }
    row.evus = found ? Verdict::kPass : Verdict::kFail;
    if (!found) {
      // Worst sample at the smallest radius and the latest alpha.
      const Run* worst = nullptr;
      for (const Run& r : runs)
        if (r.ok && r.t0 >= rep.alpha_grid.back() && r.radius <= rep.radius_levels.back() &&
            (!worst || r.sup > worst->sup))
          worst = &r;
      if (worst) {
        const auto k = static_cast<std::size_t>(
            std::max_element(worst->norms.begin(), worst->norms.end()) - worst->norms.begin());
        add_witness("evus", eps, *worst, k);
      }
    }
    evus_verdicts.push_back(row.evus);
    rep.rows.push_back(row);
  }

  // EvUA: one alpha0 for every eps; the bound must hold over the last tenth of the horizon.
  auto evua_ok = [&](const Run& r, double eps) {
    const std::size_t k = last_violation(r, eps);
    if (k == std::string::npos) return true;
    return r.times[k] - r.t0 <= 0.9 * opts.horizon && k + 1 < r.norms.size();
  };
  auto in_ball = [&](const Run& r) { return r.ok && r.radius <= opts.delta0; };
  double alpha0 = rep.alpha_grid.back();
  for (double alpha : rep.alpha_grid) {
    bool all = true;
    for (double eps : opts.eps_levels)
      for (const Run& r : runs)
        if (in_ball(r) && r.t0 >= alpha && !evua_ok(r, eps)) all = false;
    if (all) {
      alpha0 = alpha;
      break;
    }
  }
  rep.alpha0 = alpha0;
  std::vector<Verdict> evua_verdicts;
  for (EpsRow& row : rep.rows) {
    bool pass = true;
    bool all_trending = true;
    double T = 0.0;
    for (const Run& r : runs) {
      if (!in_ball(r) || r.t0 < alpha0) continue;
      if (evua_ok(r, row.eps)) {
        const std::size_t k = last_violation(r, row.eps);
        if (k != std::string::npos) T = std::max(T, r.times[k] - r.t0);
        continue;
      }
      pass = false;
      if (!trending_down(r)) all_trending = false;
      add_witness("evua", row.eps, r, r.norms.size() - 1);
    }
    row.evua = pass ? Verdict::kPass : (all_trending ? Verdict::kInconclusive : Verdict::kFail);
    row.T = pass ? T : kNaN;
    evua_verdicts.push_back(row.evua);
  }

  rep.evus = combine(evus_verdicts);
  rep.evua = combine(evua_verdicts);
  if (!rep.failures.empty()) {
    if (rep.evus == Verdict::kPass) rep.evus = Verdict::kInconclusive;
    if (rep.evua == Verdict::kPass) rep.evua = Verdict::kInconclusive;
  }
  rep.evuas = combine({rep.evus, rep.evua});
  return rep;
}

double replay_witness(const TrajectoryFactory& sim, const Witness& w, double horizon, Norm norm) {
  Trajectory traj = sim(w.t0, w.x0, w.t0 + horizon);
  traj.norm = norm;
  for (std::size_t k = 0; k < traj.size(); ++k)
    if (traj.times[k] == w.t) return traj.state_norm(k);
  throw std::runtime_error("witness time is not a sample of the replayed trajectory");
}

KlEnvelope fit_kl_envelope(const std::vector<Trajectory>& trajectories, double transient_fraction) {
  if (trajectories.empty()) throw std::invalid_argument("fit_kl_envelope: no trajectories");
  const Norm norm = trajectories.front().norm;
  struct Point {
    double s, y;
    bool fit;
  };
  std::vector<Point> pts;
  KlEnvelope env;
  for (const Trajectory& tr : trajectories) {
    if (tr.norm != norm) throw std::invalid_argument("fit_kl_envelope: trajectories use different norms");
    if (tr.size() < 2) throw std::invalid_argument("fit_kl_envelope: trajectory has fewer than 2 samples");
    const double n0 = tr.state_norm(0);
    if (!(n0 > 0.0)) throw std::invalid_argument("fit_kl_envelope: initial state is zero");
    env.max_initial_norm = std::max(env.max_initial_norm, n0);
    const double span = tr.times.back() - tr.times.front();
    env.max_span = std::max(env.max_span, span);
    const auto norms = tr.state_norms();
    for (std::size_t k = 0; k < tr.size(); ++k) {
      if (!(norms[k] > 0.0)) continue;
      const double s = tr.times[k] - tr.times.front();
      pts.push_back({s, std::log(norms[k] / n0), s >= transient_fraction * span});
    }
  }
  double sn = 0, ss = 0, sy = 0, sss = 0, ssy = 0;
  for (const Point& p : pts)
    if (p.fit) {
      sn += 1;
      ss += p.s;
      sy += p.y;
      sss += p.s * p.s;
      ssy += p.s * p.y;
    }
  env.points = static_cast<std::size_t>(sn);
  const double var = sss - ss * ss / std::max(sn, 1.0);
  if (sn < 2 || !(var > 0.0)) {
    env.accepted = false;
    return env;
  }
  const double slope = (ssy - ss * sy / sn) / var;
  const double intercept = (sy - slope * ss) / sn;
  env.mu = -slope;
  double rss = 0.0;
  for (const Point& p : pts)
    if (p.fit) rss += std::pow(p.y - (intercept + slope * p.s), 2);
  env.fit_residual = std::sqrt(rss / sn);
  if (!(env.mu > 0.0)) {
    env.accepted = false;
    return env;
  }
  double log_kappa = 0.0;
  for (const Point& p : pts) log_kappa = std::max(log_kappa, p.y + env.mu * p.s);
  env.kappa = std::exp(log_kappa);
  env.accepted = true;
  return env;
}

bool envelope_holds(const KlEnvelope& env, const std::vector<Trajectory>& trajectories) {
  if (!env.accepted) return false;
  for (const Trajectory& tr : trajectories) {
    const double n0 = tr.state_norm(0);
    const auto norms = tr.state_norms();
    for (std::size_t k = 0; k < tr.size(); ++k) {
      const double bound = env.kappa * n0 * std::exp(-env.mu * (tr.times[k] - tr.times.front()));
      if (norms[k] > bound * (1.0 + env.slack)) return false;
    }
  }
  return true;
}

DeltaEstimate estimate_delta_of_eps(const TrajectoryFactory& sim, std::size_t dim, double eps, double t0,
                                    double horizon, const DeltaSearchOptions& opts) {
  if (!(eps > 0.0)) throw std::invalid_argument("estimate_delta_of_eps: eps must be positive");
  if (!(horizon > 0.0)) throw std::invalid_argument("estimate_delta_of_eps: horizon must be positive");
  const auto dirs = sphere_directions(dim, opts.directions, opts.seed);
  DeltaEstimate out;
  std::size_t failures = 0;

  // A level passes when every sample stays below eps and none grows: the
  // final norm may not exceed the peak over the first half of the horizon.
  auto passes = [&](double level) {
    std::vector<Run> runs(dirs.size());
    detail::parallel_for(dirs.size(), opts.threads, [&](std::size_t i) {
      runs[i] = simulate(sim, t0, level * dirs[i], level, horizon, opts.norm);
    });
    for (const Run& r : runs) {
      if (!r.ok) {
        ++failures;
        return false;
      }
      if (!(r.sup < eps)) return false;
      double early_peak = 0.0;
      for (std::size_t k = 0; k < r.times.size(); ++k)
        if (r.times[k] <= t0 + 0.5 * horizon) early_peak = std::max(early_peak, r.norms[k]);
      if (r.norms.back() > early_peak) return false;
    }
    return true;
  };

  double lo = 0.0;
  double hi = eps;
  for (int it = 0; it < opts.iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const bool ok = passes(mid);
    out.levels.push_back(mid);
    out.passed.push_back(ok);
    (ok ? lo : hi) = mid;
  }
  out.delta = lo;
  if (lo == 0.0)
    out.diagnostics = "no tested level kept every sample below eps without growth";
  if (failures > 0) out.diagnostics += (out.diagnostics.empty() ? "" : "; ") + std::to_string(failures) +
                                       " level(s) had simulation failures";
  return out;
}

}  // namespace evuas
