#include "evuas/synthesis.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "evuas/errors.hpp"

namespace evuas {

namespace {

constexpr double kConjTol = 1e-10;

double induced_norm(const Eigen::MatrixXd& a, Norm norm) {
  if (norm == Norm::kInf) return a.cwiseAbs().rowwise().sum().maxCoeff();
  if (a.size() == 1) return std::abs(a(0, 0));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  return svd.singularValues()(0);
}

std::string pole_text(const Complex& p) {
  return "(" + std::to_string(p.real()) + (p.imag() < 0 ? " - " : " + ") +
         std::to_string(std::abs(p.imag())) + "i)";
}

// Throws unless every pole has Re < 0 and non-real poles pair with conjugates.
void validate_pole_set(const PoleSet& poles, const std::string& where) {
  std::vector<bool> used(poles.size(), false);
  for (std::size_t i = 0; i < poles.size(); ++i) {
    const Complex p = poles[i];
    if (!std::isfinite(p.real()) || !std::isfinite(p.imag()))
      throw DesignError(where + ": pole is not finite");
    if (!(p.real() < 0.0))
      throw DesignError(where + ": pole " + pole_text(p) + " does not have negative real part");
  }
  for (std::size_t i = 0; i < poles.size(); ++i) {
    if (used[i]) continue;
    const Complex p = poles[i];
    const double scale = std::max(1.0, std::abs(p));
    if (std::abs(p.imag()) <= kConjTol * scale) {
      used[i] = true;
      continue;
    }
    bool matched = false;
    for (std::size_t k = 0; k < poles.size(); ++k) {
      if (k == i || used[k]) continue;
      if (std::abs(poles[k] - std::conj(p)) <= kConjTol * scale) {
        used[i] = used[k] = true;
        matched = true;
        break;
      }
    }
    if (!matched)
      throw DesignError(where + ": pole " + pole_text(p) + " has no conjugate partner");
  }
}

// |p(r)| / sum |c_i||r|^i for every declared root.
double worst_root_residual(const Eigen::VectorXd& coeffs, const PoleSet& roots) {
  double worst = 0.0;
  for (const Complex& r : roots) {
    Complex acc = 0.0;
    double scale = 0.0;
    for (Eigen::Index i = coeffs.size() - 1; i >= 0; --i) {
      acc = acc * r + coeffs[i];
      scale = scale * std::abs(r) + std::abs(coeffs[i]);
    }
    worst = std::max(worst, std::abs(acc) / std::max(scale, 1e-300));
  }
  return worst;
}

}  // namespace

Eigen::VectorXd monic_from_roots(const PoleSet& roots) {
  std::vector<Complex> c{Complex(1.0, 0.0)};
  for (const Complex& r : roots) {
    std::vector<Complex> next(c.size() + 1, Complex(0.0, 0.0));
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i + 1] += c[i];
      next[i] -= r * c[i];
    }
    c = std::move(next);
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) out[static_cast<Eigen::Index>(i)] = c[i].real();
  return out;
}

PoleSet roots_of_monic(const Eigen::VectorXd& coeffs) {
  const Eigen::Index deg = coeffs.size() - 1;
  if (deg < 1) return {};
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
  for (Eigen::Index i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  for (Eigen::Index i = 0; i < deg; ++i) comp(i, deg - 1) = -coeffs[i] / coeffs[deg];
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  PoleSet out;
  for (Eigen::Index i = 0; i < deg; ++i) out.push_back(es.eigenvalues()[i]);
  return out;
}

Eigen::VectorXd GammaDesign::tracking_error(const Eigen::MatrixXd& delta) const {
  const auto mm = static_cast<Eigen::Index>(m());
  const auto nn = static_cast<Eigen::Index>(n());
  if (delta.rows() != mm || delta.cols() != nn) throw ShapeError("Delta must be m x n");
  Eigen::VectorXd e(mm);
  for (Eigen::Index j = 0; j < mm; ++j) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i + 1 < nn; ++i) acc += delta(j, i) * gamma(i, j);
    e[j] = acc + delta(j, nn - 1);
  }
  return e;
}

Eigen::VectorXd GammaDesign::shifted_term(const Eigen::MatrixXd& delta) const {
  const auto mm = static_cast<Eigen::Index>(m());
  const auto nn = static_cast<Eigen::Index>(n());
  if (delta.rows() != mm || delta.cols() != nn) throw ShapeError("Delta must be m x n");
  Eigen::VectorXd s(mm);
  for (Eigen::Index j = 0; j < mm; ++j) {
    double acc = 0.0;
    for (Eigen::Index i = 1; i < nn; ++i) acc += delta(j, i) * gamma(i - 1, j);
    s[j] = acc;
  }
  return s;
}

Eigen::VectorXd GammaDesign::polynomial(std::size_t j) const {
  const auto k = gamma.rows();
  Eigen::VectorXd c(k + 1);
  c.head(k) = gamma.col(static_cast<Eigen::Index>(j));
  c[k] = 1.0;
  return c;
}

Eigen::MatrixXd GammaDesign::companion(std::size_t j) const {
  const auto k = gamma.rows();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i + 1 < k; ++i) c(i, i + 1) = 1.0;
  c.row(k - 1) = -gamma.col(static_cast<Eigen::Index>(j)).transpose();
  return c;
}

double transition_overshoot(const GammaDesign& design, double horizon, std::size_t points) {
  if (points < 2) throw std::invalid_argument("transition grid needs at least 2 points");
  const double dt = horizon / static_cast<double>(points - 1);
  double sup = 1.0;
  for (std::size_t j = 0; j < design.m(); ++j) {
    const Eigen::MatrixXd c = design.companion(j);
    const Eigen::MatrixXd step = (c * dt).exp();
    Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(c.rows(), c.cols());
    for (std::size_t k = 1; k < points; ++k) {
      phi = phi * step;
      sup = std::max(sup, induced_norm(phi, design.norm));
    }
  }
  return sup;
}

GammaDesign build_gamma(const std::vector<PoleSet>& poles_per_column, std::size_t n, Norm norm) {
  if (n < 2) throw DesignError("derivative order n must exceed 1");
  if (poles_per_column.empty()) throw DesignError("at least one column of poles is required");
  const auto m = static_cast<Eigen::Index>(poles_per_column.size());
  GammaDesign d;
  d.norm = norm;
  d.poles = poles_per_column;
  d.gamma = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n - 1), m);
  d.mu_gamma = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < m; ++j) {
    const PoleSet& ps = poles_per_column[static_cast<std::size_t>(j)];
    const std::string where = "Gamma column " + std::to_string(j + 1);
    if (ps.size() != n - 1)
      throw DesignError(where + ": expected " + std::to_string(n - 1) + " poles, got " +
                        std::to_string(ps.size()));
    validate_pole_set(ps, where);
    const Eigen::VectorXd c = monic_from_roots(ps);
    if (worst_root_residual(c, ps) > 1e-8) throw DesignError(where + ": polynomial reconstruction failed");
    d.gamma.col(j) = c.head(static_cast<Eigen::Index>(n - 1));
    double max_re = -std::numeric_limits<double>::infinity();
    for (const Complex& p : ps) max_re = std::max(max_re, p.real());
    d.mu_gamma = std::min(d.mu_gamma, -max_re);
  }
  d.gamma_star = std::max(1.0, d.gamma.cwiseAbs().maxCoeff());
  d.kappa = 1.05 * transition_overshoot(d, 20.0 / d.mu_gamma);
  return d;
}

HurwitzMatrix build_hurwitz(const Eigen::MatrixXd& a_h) {
  if (a_h.rows() != a_h.cols() || a_h.rows() == 0) throw ShapeError("A_H must be a non-empty square matrix");
  if (!a_h.allFinite()) throw DesignError("A_H has non-finite entries");
  Eigen::EigenSolver<Eigen::MatrixXd> es(a_h, false);
  HurwitzMatrix h;
  h.a_h = a_h;
  h.max_real_part = -std::numeric_limits<double>::infinity();
  Complex worst;
  for (Eigen::Index i = 0; i < a_h.rows(); ++i) {
    const Complex ev = es.eigenvalues()[i];
    h.eigenvalues.push_back(ev);
    if (ev.real() > h.max_real_part) {
      h.max_real_part = ev.real();
      worst = ev;
    }
  }
  if (!(h.max_real_part < -1e-12))
    throw DesignError("A_H is not Hurwitz: eigenvalue " + pole_text(worst) + " has real part >= 0");
  return h;
}

HurwitzMatrix default_hurwitz(std::size_t m) {
  return build_hurwitz(-Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)));
}

NonsingularReport check_nonsingular(const Eigen::MatrixXd& b) {
  if (b.rows() != b.cols() || b.rows() == 0) throw ShapeError("check_nonsingular needs a square matrix");
  NonsingularReport r;
  r.levy_desplanques = true;
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    const double off = b.row(i).cwiseAbs().sum() - std::abs(b(i, i));
    if (!(std::abs(b(i, i)) > off)) r.levy_desplanques = false;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(b);
  r.numeric_nonsingular = lu.rank() == b.rows();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  r.condition_estimate = smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
  return r;
}

// ---- Controller ----------------------------------------------------------

const GammaDesign& Controller::design() const {
  if (!design_) throw std::logic_error("linear-gain controller has no Gamma design");
  return *design_;
}

const HurwitzMatrix& Controller::hurwitz() const {
  if (!hurwitz_) throw std::logic_error("linear-gain controller has no A_H");
  return *hurwitz_;
}

const Eigen::MatrixXd& Controller::gain() const {
  if (mode_ != Mode::kLinearGain) throw std::logic_error("implicit controller has no linear gain");
  return gain_;
}

Controller Controller::implicit(std::shared_ptr<const SystemModel> model, GammaDesign design,
                                HurwitzMatrix hurwitz, NewtonConfig newton) {
  if (design.m() != model->m() || design.n() != model->n())
    throw ShapeError("Gamma design does not match the model's (m, n)");
  if (static_cast<std::size_t>(hurwitz.a_h.rows()) != model->m()) throw ShapeError("A_H must be m x m");
  Controller c;
  c.mode_ = Mode::kImplicitNewton;
  c.model_ = std::move(model);
  c.design_ = std::make_shared<const GammaDesign>(std::move(design));
  c.hurwitz_ = std::make_shared<const HurwitzMatrix>(std::move(hurwitz));
  c.newton_ = newton;
  return c;
}

Controller Controller::linear(std::shared_ptr<const SystemModel> model, Eigen::MatrixXd gain) {
  if (static_cast<std::size_t>(gain.rows()) != model->m() ||
      static_cast<std::size_t>(gain.cols()) != model->state_dim())
    throw ShapeError("linear gain must be m x mn");
  Controller c;
  c.mode_ = Mode::kLinearGain;
  c.model_ = std::move(model);
  c.gain_ = std::move(gain);
  return c;
}

Eigen::VectorXd Controller::offset(const Eigen::MatrixXd& delta, const Eigen::VectorXd* y_d_n) const {
  Eigen::VectorXd c = design_->shifted_term(delta);
  if (y_d_n) c = c - *y_d_n;
  c = c - hurwitz_->a_h * design_->tracking_error(delta);
  return c;
}

ControllerEval Controller::solve(const Eigen::VectorXd& x_eval, const Eigen::VectorXd& c,
                                 const Eigen::VectorXd* warm) const {
  const SystemModel& f = *model_;
  const auto m = static_cast<Eigen::Index>(f.m());
  const double threshold = newton_.tol * std::max(1.0, c.norm());

  ControllerEval out;
  out.u = warm ? *warm : Eigen::VectorXd::Zero(m);
  if (out.u.size() != m) throw ShapeError("warm-start input has the wrong length");

  auto residual_at = [&](const Eigen::VectorXd& u, Eigen::VectorXd& r) {
    try {
      r = f.eval(x_eval, u) + c;
      return r.allFinite();
    } catch (const EvaluationError&) {
      return false;
    }
  };

  Eigen::VectorXd r;
  if (!residual_at(out.u, r)) {
    if (warm) return solve(x_eval, c, nullptr);
    throw ControllerError("Ftilde is not finite at the Newton seed", x_eval, INFINITY, 0, false);
  }
  double rn = r.norm();
  Eigen::VectorXd u_try, r_try;
  for (int it = 1; rn > threshold; ++it) {
    if (it > newton_.max_iterations)
      throw ControllerError("Newton did not converge within " + std::to_string(newton_.max_iterations) +
                                " iterations (residual " + std::to_string(rn) + ")",
                            x_eval, rn, it - 1, false);
    const Eigen::MatrixXd j = f.jacobian_u(x_eval, out.u);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(j);
    if (lu.rank() < m || !j.allFinite())
      throw ControllerError("J_{F,U} is singular at a Newton iterate", x_eval, rn, it, true);
    const Eigen::VectorXd step = -lu.solve(r);
    double alpha = 1.0;
    bool improved = false;
    double rn_try = INFINITY;
    for (int h = 0; h <= newton_.max_halvings; ++h) {
      u_try = out.u + alpha * step;
      if (residual_at(u_try, r_try)) {
        rn_try = r_try.norm();
        if (rn_try < rn) {
          improved = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!improved) {
      if (!std::isfinite(rn_try))
        throw ControllerError("Newton step left the domain where F is finite", x_eval, rn, it, false);
      // Accept the most damped step; the iteration cap bounds the cost.
    }
    out.u = u_try;
    r = r_try;
    rn = rn_try;
    out.iterations = it;
  }
  out.residual = rn;
  return out;
}

Eigen::VectorXd Controller::residual(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  if (mode_ != Mode::kImplicitNewton) throw std::logic_error("residual is defined for the implicit controller");
  model_->check_state(x);
  const Eigen::Map<const Eigen::MatrixXd> xm(x.data(), static_cast<Eigen::Index>(model_->m()),
                                             static_cast<Eigen::Index>(model_->n()));
  return model_->eval(x, u) + offset(xm, nullptr);
}

ControllerEval Controller::evaluate(const Eigen::VectorXd& x, const Eigen::VectorXd* warm) const {
  model_->check_state(x);
  if (mode_ == Mode::kLinearGain) return {gain_ * x, 0.0, 0};
  const Eigen::Map<const Eigen::MatrixXd> xm(x.data(), static_cast<Eigen::Index>(model_->m()),
                                             static_cast<Eigen::Index>(model_->n()));
  return solve(x, offset(xm, nullptr), warm);
}

ControllerEval Controller::evaluate_tracking(double t, const Eigen::VectorXd& delta, const TrackingSpec& spec,
                                             const Eigen::VectorXd* warm) const {
  if (mode_ != Mode::kImplicitNewton) throw std::logic_error("tracking requires the implicit controller");
  model_->check_state(delta);
  const Eigen::MatrixXd xd = spec.x_d(t);
  const Eigen::VectorXd ydn = spec.y_d_n(t);
  if (xd.rows() != static_cast<Eigen::Index>(model_->m()) || xd.cols() != static_cast<Eigen::Index>(model_->n()))
    throw ShapeError("X_d(t) must be m x n");
  if (ydn.size() != static_cast<Eigen::Index>(model_->m())) throw ShapeError("Y_d^(n)(t) must have length m");
  const Eigen::Map<const Eigen::MatrixXd> dm(delta.data(), xd.rows(), xd.cols());
  const Eigen::VectorXd x_eval = delta + Eigen::Map<const Eigen::VectorXd>(xd.data(), xd.size());
  return solve(x_eval, offset(dm, &ydn), warm);
}

Controller synthesize_feedback(const SystemModel& model, GammaDesign design, HurwitzMatrix hurwitz,
                               NewtonConfig newton, const ValidityProbeOptions& probe) {
  model.require_equilibrium(1e-10);
  const auto d = static_cast<Eigen::Index>(model.state_dim());
  const auto m = static_cast<Eigen::Index>(model.m());
  const Eigen::MatrixXd j0 = model.jacobian_u(Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(m));
  if (!check_nonsingular(j0).numeric_nonsingular) throw DesignError("J_{F,U}(0,0) is singular");

  Controller c = Controller::implicit(std::make_shared<const SystemModel>(model), std::move(design),
                                      std::move(hurwitz), newton);

  // Continuation along seeded rays; the first failure on a ray bounds P.
  std::mt19937_64 rng(probe.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ValidityLog log;
  log.probe_limit = probe.max_radius;
  double last_good = probe.max_radius;
  for (std::size_t k = 0; k < probe.directions; ++k) {
    Eigen::VectorXd dir(d);
    for (Eigen::Index i = 0; i < d; ++i) dir[i] = gauss(rng);
    dir.normalize();
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(m);
    double good = 0.0;
    for (double r = probe.min_radius; r <= probe.max_radius * (1.0 + 1e-12); r *= probe.growth) {
      try {
        warm = c.evaluate(r * dir, &warm).u;
        good = r;
      } catch (const ControllerError& e) {
        log.failures.push_back({r, k, e.residual(), e.iterations(), e.singular()});
        break;
      }
    }
    if (log.failures.empty() || log.failures.back().direction != k) good = probe.max_radius;
    last_good = std::min(last_good, good);
  }
  log.last_good_radius = last_good;
  c.validity_ = std::move(log);
  return c;
}

// ---- coercivity ----------------------------------------------------------

std::string to_string(CoercivityVerdict v) {
  switch (v) {
    case CoercivityVerdict::kCoercive:
      return "coercive-evidence";
    case CoercivityVerdict::kNonCoercive:
      return "non-coercive-evidence";
    case CoercivityVerdict::kInconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

CoercivityProbe coercivity_probe(const SystemModel& model, const std::vector<Eigen::VectorXd>& x_samples,
                                 std::size_t ray_count, const std::vector<double>& radii, std::uint64_t seed) {
  if (radii.size() < 3) throw std::invalid_argument("coercivity probe needs at least 3 radii");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw std::invalid_argument("coercivity radii must be positive");
    if (i > 0 && !(radii[i] > radii[i - 1])) throw std::invalid_argument("coercivity radii must increase");
  }
  if (radii.back() < 1e3 * radii.front())
    throw std::invalid_argument("coercivity radii must span at least 3 decades");
  if (ray_count == 0) throw std::invalid_argument("ray_count must be positive");

  constexpr double kGrowth = 10.0;
  constexpr double kPlateau = 1.01;
  const auto m = static_cast<Eigen::Index>(model.m());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  CoercivityProbe out;
  out.radii = radii;
  bool all_coercive = !x_samples.empty();
  bool any_non = false;
  for (const Eigen::VectorXd& x : x_samples) {
    std::vector<std::vector<double>> table;
    for (std::size_t r = 0; r < ray_count; ++r) {
      Eigen::VectorXd dir(m);
      for (Eigen::Index i = 0; i < m; ++i) dir[i] = gauss(rng);
      dir.normalize();
      std::vector<double> row;
      bool ok = true;
      for (double rad : radii) {
        try {
          row.push_back(0.5 * model.eval(x, rad * dir).squaredNorm());
        } catch (const EvaluationError&) {
          ok = false;
          break;
        }
      }
      if (!ok) {
        ++out.excluded_rays;
        row.assign(radii.size(), std::numeric_limits<double>::quiet_NaN());
      }
      table.push_back(std::move(row));
    }
    double lo_max = -INFINITY;
    double hi_min = INFINITY;
    bool plateau = false;
    std::size_t valid = 0;
    for (const auto& row : table) {
      if (std::isnan(row.front())) continue;
      ++valid;
      lo_max = std::max(lo_max, row.front());
      hi_min = std::min(hi_min, row.back());
      if (row.back() <= kPlateau * row[row.size() - 2]) plateau = true;
    }
    CoercivityVerdict v = CoercivityVerdict::kInconclusive;
    // A ray that stops growing over the last radius step outweighs the
    // end-to-end growth: saturating maps still rise from a small first radius.
    if (valid > 0) {
      if (plateau)
        v = CoercivityVerdict::kNonCoercive;
      else if (hi_min >= kGrowth * lo_max && hi_min > 0.0)
        v = CoercivityVerdict::kCoercive;
    }
    if (v != CoercivityVerdict::kCoercive) all_coercive = false;
    if (v == CoercivityVerdict::kNonCoercive) any_non = true;
    out.per_sample.push_back(v);
    out.phi.push_back(std::move(table));
  }
  out.verdict = any_non ? CoercivityVerdict::kNonCoercive
                        : (all_coercive ? CoercivityVerdict::kCoercive : CoercivityVerdict::kInconclusive);
  return out;
}

// ---- linearization and pole placement -------------------------------------

Linearization linearize(const SystemModel& model) {
  const auto m = static_cast<Eigen::Index>(model.m());
  const auto n = static_cast<Eigen::Index>(model.n());
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(m * n);
  const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(m);
  Linearization lin;
  lin.a = Eigen::MatrixXd::Zero(m * n, m * n);
  for (Eigen::Index i = 0; i + 1 < n; ++i)
    lin.a.block(i * m, (i + 1) * m, m, m) = Eigen::MatrixXd::Identity(m, m);
  lin.a.bottomRows(m) = model.jacobian_x(x0, u0);
  lin.b = Eigen::MatrixXd::Zero(m * n, m);
  lin.b.bottomRows(m) = model.jacobian_u(x0, u0);
  return lin;
}

Eigen::Index controllability_rank(const Linearization& lin) {
  const Eigen::Index d = lin.a.rows();
  const Eigen::Index m = lin.b.cols();
  Eigen::MatrixXd ctrb(d, d * m);
  Eigen::MatrixXd block = lin.b;
  for (Eigen::Index k = 0; k < d; ++k) {
    Eigen::MatrixXd scaled = block;
    for (Eigen::Index c = 0; c < m; ++c) {
      const double nrm = scaled.col(c).norm();
      if (nrm > 0.0) scaled.col(c) /= nrm;
    }
    ctrb.middleCols(k * m, m) = scaled;
    block = lin.a * block;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(ctrb);
  lu.setThreshold(1e-10);
  return lu.rank();
}

Eigen::VectorXd characteristic_polynomial(const Eigen::MatrixXd& a) {
  using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = a.rows();
  const LMat al = a.cast<long double>();
  std::vector<long double> c(static_cast<std::size_t>(n + 1), 0.0L);
  c[static_cast<std::size_t>(n)] = 1.0L;
  LMat mk = LMat::Zero(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    mk = al * mk + c[static_cast<std::size_t>(n - k + 1)] * LMat::Identity(n, n);
    c[static_cast<std::size_t>(n - k)] = -(al * mk).trace() / static_cast<long double>(k);
  }
  Eigen::VectorXd out(n + 1);
  for (Eigen::Index i = 0; i <= n; ++i) out[i] = static_cast<double>(c[static_cast<std::size_t>(i)]);
  return out;
}

namespace {

// Splits the desired spectrum into m conjugate-closed groups of n poles.
bool group_poles(const PoleSet& desired, std::size_t m, std::size_t n, std::vector<PoleSet>* groups) {
  std::vector<PoleSet> units;
  std::vector<bool> used(desired.size(), false);
  for (std::size_t i = 0; i < desired.size(); ++i) {
    if (used[i]) continue;
    used[i] = true;
    const Complex p = desired[i];
    if (std::abs(p.imag()) <= kConjTol * std::max(1.0, std::abs(p))) {
      units.push_back({Complex(p.real(), 0.0)});
      continue;
    }
    for (std::size_t k = i + 1; k < desired.size(); ++k) {
      if (!used[k] && std::abs(desired[k] - std::conj(p)) <= kConjTol * std::max(1.0, std::abs(p))) {
        used[k] = true;
        units.push_back({p, std::conj(p)});
        break;
      }
    }
  }
  std::stable_sort(units.begin(), units.end(), [](const PoleSet& x, const PoleSet& y) {
    if (x.size() != y.size()) return x.size() > y.size();
    return x.front().real() < y.front().real();
  });
  groups->assign(m, {});
  for (const PoleSet& u : units) {
    std::size_t best = m;
    for (std::size_t g = 0; g < m; ++g) {
      const std::size_t room = n - (*groups)[g].size();
      if (room >= u.size() && (best == m || room > n - (*groups)[best].size())) best = g;
    }
    if (best == m) return false;
    (*groups)[best].insert((*groups)[best].end(), u.begin(), u.end());
  }
  return std::all_of(groups->begin(), groups->end(), [n](const PoleSet& g) { return g.size() == n; });
}

}  // namespace

PlacementReport place_poles(const SystemModel& model, const PoleSet& desired) {
  const std::size_t m = model.m();
  const std::size_t n = model.n();
  const auto mi = static_cast<Eigen::Index>(m);
  const auto d = static_cast<Eigen::Index>(m * n);
  if (desired.size() != m * n)
    throw DesignError("pole placement needs " + std::to_string(m * n) + " poles, got " +
                      std::to_string(desired.size()));
  validate_pole_set(desired, "desired closed-loop poles");
  const Linearization lin = linearize(model);
  const Eigen::MatrixXd ju = lin.b.bottomRows(mi);
  if (!check_nonsingular(ju).numeric_nonsingular) throw DesignError("J_{F,U}(0,0) is singular");
  const Eigen::Index rank = controllability_rank(lin);
  if (rank < d)
    throw DesignError("linearization is not controllable: controllability matrix rank " +
                      std::to_string(rank) + " < " + std::to_string(d));

  // Companion form in flattened coordinates: entry (j, i*m + j) multiplies
  // Y_j^(i). Block-diagonal when the poles split into per-channel groups,
  // otherwise one chain Y_1 -> ... -> Y_1^(n-1) -> Y_2 -> ... of length mn.
  Eigen::MatrixXd kc = Eigen::MatrixXd::Zero(mi, d);
  std::vector<PoleSet> groups;
  PlacementReport rep;
  rep.block_diagonal = group_poles(desired, m, n, &groups);
  if (rep.block_diagonal) {
    for (std::size_t j = 0; j < m; ++j) {
      const Eigen::VectorXd c = monic_from_roots(groups[j]);
      for (std::size_t i = 0; i < n; ++i)
        kc(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i * m + j)) = -c[static_cast<Eigen::Index>(i)];
    }
  } else {
    for (std::size_t j = 0; j + 1 < m; ++j) kc(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j + 1)) = 1.0;
    const Eigen::VectorXd c = monic_from_roots(desired);
    for (std::size_t q = 0; q < m * n; ++q) {
      const std::size_t channel = q / n;
      const std::size_t order = q % n;
      kc(mi - 1, static_cast<Eigen::Index>(order * m + channel)) = -c[static_cast<Eigen::Index>(q)];
    }
  }
  const Eigen::MatrixXd jx = lin.a.bottomRows(mi);
  rep.gain = ju.fullPivLu().solve(kc - jx);

  const Eigen::MatrixXd closed = lin.a + lin.b * rep.gain;
  Eigen::EigenSolver<Eigen::MatrixXd> es(closed, false);
  std::vector<bool> taken(desired.size(), false);
  for (Eigen::Index i = 0; i < d; ++i) {
    const Complex ev = es.eigenvalues()[i];
    rep.closed_loop_eigenvalues.push_back(ev);
  }
  for (const Complex& p : desired) {
    double best = INFINITY;
    std::size_t arg = 0;
    for (std::size_t k = 0; k < rep.closed_loop_eigenvalues.size(); ++k) {
      if (taken[k]) continue;
      const double dist = std::abs(rep.closed_loop_eigenvalues[k] - p);
      if (dist < best) {
        best = dist;
        arg = k;
      }
    }
    taken[arg] = true;
    rep.spectrum_error = std::max(rep.spectrum_error, best);
  }
  const Eigen::VectorXd got = characteristic_polynomial(closed);
  const Eigen::VectorXd want = monic_from_roots(desired);
  for (Eigen::Index i = 0; i < want.size(); ++i)
    rep.charpoly_error = std::max(rep.charpoly_error, std::abs(got[i] - want[i]) / std::max(1.0, std::abs(want[i])));
  return rep;
}

Controller linearize_and_place(const SystemModel& model, const PoleSet& desired) {
  PlacementReport rep = place_poles(model, desired);
  if (rep.charpoly_error > 1e-8)
    throw DesignError("closed-loop characteristic polynomial misses the requested one by " +
                      std::to_string(rep.charpoly_error));
  return Controller::linear(std::make_shared<const SystemModel>(model), std::move(rep.gain));
}

// ---- region of attraction -------------------------------------------------

RoaEstimate estimate_roa(double gamma_star, double kappa, double mu_gamma, double r_max, double epsilon,
                         double delta_E_of_eps, double theta1, double theta2, std::size_t m) {
  if (!(gamma_star >= 1.0)) throw DesignError("gamma_star must be >= 1");
  if (!(kappa >= 1.0)) throw DesignError("kappa must be >= 1");
  if (!(mu_gamma > 0.0) || !(r_max > 0.0) || !(epsilon > 0.0) || !(delta_E_of_eps >= 0.0) ||
      !(theta1 > 0.0) || !(theta2 > 0.0) || m == 0)
    throw DesignError("region-of-attraction constants must be positive");
  if (!(epsilon < r_max * mu_gamma))
    throw DesignError("epsilon must be smaller than r_max * mu_gamma");
  RoaEstimate r;
  r.r_max = r_max;
  r.epsilon = epsilon;
  r.delta_E_of_eps = delta_E_of_eps;
  r.theta1 = theta1;
  r.theta2 = theta2;
  r.delta_star_E = theta1 / (gamma_star * theta2 * std::sqrt(static_cast<double>(m))) * delta_E_of_eps;
  r.delta_star_X = (r_max - epsilon / mu_gamma) / kappa;
  r.delta_star = std::min(r.delta_star_E, r.delta_star_X);
  return r;
}

RoaEstimate estimate_roa(const GammaDesign& design, double r_max, double epsilon, double delta_E_of_eps,
                         double theta1, double theta2, std::size_t m) {
  return estimate_roa(design.gamma_star, design.kappa, design.mu_gamma, r_max, epsilon, delta_E_of_eps, theta1,
                      theta2, m);
}

}  // namespace evuas
