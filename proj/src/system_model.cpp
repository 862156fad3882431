#include "evuas/system_model.hpp"

#include <cmath>
#include <limits>

#include "evuas/errors.hpp"

namespace evuas {

namespace {

std::string shape_report(const char* what, Eigen::Index got, std::size_t want) {
  return std::string(what) + " has length " + std::to_string(got) + ", expected " +
         std::to_string(want);
}

void require_finite(const Eigen::VectorXd& v, const std::string& what) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]))
      throw EvaluationError(what + " component " + std::to_string(i) + " is not finite",
                            static_cast<std::size_t>(i));
  }
}

void require_finite(const Eigen::MatrixXd& j, const std::string& what) {
  for (Eigen::Index c = 0; c < j.cols(); ++c)
    for (Eigen::Index r = 0; r < j.rows(); ++r)
      if (!std::isfinite(j(r, c)))
        throw EvaluationError(what + " entry (" + std::to_string(r) + "," + std::to_string(c) +
                                  ") is not finite",
                              static_cast<std::size_t>(c * j.rows() + r));
}

}  // namespace

StateMatrix::StateMatrix(std::size_t m, std::size_t n)
    : entries_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n))) {}

StateMatrix::StateMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {}

StateMatrix StateMatrix::from_flat(std::size_t m, std::size_t n, std::span<const double> flat) {
  if (flat.size() != m * n) throw ShapeError(shape_report("flattened state", static_cast<Eigen::Index>(flat.size()), m * n));
  StateMatrix s(m, n);
  std::copy(flat.begin(), flat.end(), s.entries_.data());
  return s;
}

Eigen::VectorXd StateMatrix::flatten() const {
  return Eigen::Map<const Eigen::VectorXd>(entries_.data(), entries_.size());
}

double central_difference_step(double v) {
  static const double kCbrtEps = std::cbrt(std::numeric_limits<double>::epsilon());
  return kCbrtEps * std::max(1.0, std::abs(v));
}

SystemModel::SystemModel(std::string name, std::size_t m, std::size_t n, Dynamics f, Jacobian jac_u,
                         Jacobian jac_x)
    : name_(std::move(name)), m_(m), n_(n), f_(std::move(f)), jac_u_(std::move(jac_u)),
      jac_x_(std::move(jac_x)) {
  if (m_ == 0) throw ShapeError("model needs m >= 1");
  if (n_ < 2) throw ShapeError("model needs derivative order n > 1");
  if (!f_) throw std::invalid_argument("model dynamics callback is empty");
}

void SystemModel::check_state(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != state_dim())
    throw ShapeError(shape_report("state", x.size(), state_dim()));
}

void SystemModel::check_input(const Eigen::VectorXd& u) const {
  if (static_cast<std::size_t>(u.size()) != m_) throw ShapeError(shape_report("input", u.size(), m_));
}

Eigen::VectorXd SystemModel::eval(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  check_state(x);
  check_input(u);
  Eigen::VectorXd out = f_(x, u);
  if (static_cast<std::size_t>(out.size()) != m_) throw ShapeError(shape_report("F(x,u)", out.size(), m_));
  require_finite(out, "F(x,u)");
  return out;
}

Eigen::MatrixXd SystemModel::jacobian_u_fd(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  check_state(x);
  check_input(u);
  const auto m = static_cast<Eigen::Index>(m_);
  Eigen::MatrixXd j(m, m);
  Eigen::VectorXd up = u;
  for (Eigen::Index c = 0; c < m; ++c) {
    const double h = central_difference_step(u[c]);
    up[c] = u[c] + h;
    const Eigen::VectorXd fp = eval(x, up);
    up[c] = u[c] - h;
    const Eigen::VectorXd fm = eval(x, up);
    up[c] = u[c];
    j.col(c) = (fp - fm) / (2.0 * h);
  }
  return j;
}

Eigen::MatrixXd SystemModel::jacobian_x_fd(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  check_state(x);
  check_input(u);
  const auto d = static_cast<Eigen::Index>(state_dim());
  Eigen::MatrixXd j(static_cast<Eigen::Index>(m_), d);
  Eigen::VectorXd xp = x;
  for (Eigen::Index c = 0; c < d; ++c) {
    const double h = central_difference_step(x[c]);
    xp[c] = x[c] + h;
    const Eigen::VectorXd fp = eval(xp, u);
    xp[c] = x[c] - h;
    const Eigen::VectorXd fm = eval(xp, u);
    xp[c] = x[c];
    j.col(c) = (fp - fm) / (2.0 * h);
  }
  return j;
}

Eigen::MatrixXd SystemModel::jacobian_u(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  if (!jac_u_) return jacobian_u_fd(x, u);
  check_state(x);
  check_input(u);
  Eigen::MatrixXd j = jac_u_(x, u);
  if (static_cast<std::size_t>(j.rows()) != m_ || static_cast<std::size_t>(j.cols()) != m_)
    throw ShapeError("analytic J_{F,U} must be " + std::to_string(m_) + "x" + std::to_string(m_));
  require_finite(j, "J_{F,U}");
  return j;
}

Eigen::MatrixXd SystemModel::jacobian_x(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  if (!jac_x_) return jacobian_x_fd(x, u);
  check_state(x);
  check_input(u);
  Eigen::MatrixXd j = jac_x_(x, u);
  if (static_cast<std::size_t>(j.rows()) != m_ || static_cast<std::size_t>(j.cols()) != state_dim())
    throw ShapeError("analytic J_{F,X} must be " + std::to_string(m_) + "x" +
                     std::to_string(state_dim()));
  require_finite(j, "J_{F,X}");
  return j;
}

void SystemModel::require_equilibrium(double tol) const {
  const Eigen::VectorXd f0 = eval(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(state_dim())),
                                  Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_)));
  if (f0.norm() > tol)
    throw DesignError("F(0,0) = " + std::to_string(f0.norm()) + " exceeds tolerance; origin is not an equilibrium");
}

Eigen::VectorXd evaluate_dynamics(const SystemModel& model, const Perturbation& pert, double t,
                                  const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  model.check_state(x);
  model.check_input(u);
  if (pert.dim() != model.m())
    throw ShapeError(shape_report("perturbation", static_cast<Eigen::Index>(pert.dim()), model.m()));
  const auto m = static_cast<Eigen::Index>(model.m());
  const auto d = static_cast<Eigen::Index>(model.state_dim());
  Eigen::VectorXd dx(d);
  dx.head(d - m) = x.tail(d - m);
  Eigen::VectorXd last = model.eval(x, u);
  pert.accumulate(t, x, last);
  dx.tail(m) = last;
  return dx;
}

Eigen::VectorXd evaluate_dynamics(const SystemModel& model, const Perturbation& pert, double t,
                                  const StateMatrix& x, const Eigen::VectorXd& u) {
  if (x.m() != model.m() || x.n() != model.n())
    throw ShapeError("state matrix is " + std::to_string(x.m()) + "x" + std::to_string(x.n()) +
                     ", model expects " + std::to_string(model.m()) + "x" + std::to_string(model.n()));
  return evaluate_dynamics(model, pert, t, x.flatten(), u);
}

}  // namespace evuas
