#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "evuas/perturbation.hpp"

namespace evuas {

// State of m coupled nth-order equations: column i (0-based) holds the
// i-th derivative Y^(i). Flattening is column order (X_1, ..., X_n), which
// is Eigen's native column-major storage.
class StateMatrix {
 public:
  StateMatrix(std::size_t m, std::size_t n);
  explicit StateMatrix(Eigen::MatrixXd entries);

  static StateMatrix from_flat(std::size_t m, std::size_t n, std::span<const double> flat);

  std::size_t m() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  std::size_t n() const noexcept { return static_cast<std::size_t>(entries_.cols()); }

  const Eigen::MatrixXd& entries() const noexcept { return entries_; }
  Eigen::MatrixXd& entries() noexcept { return entries_; }

  Eigen::VectorXd flatten() const;

 private:
  Eigen::MatrixXd entries_;
};

// The controlled system Y^(n) = F(Y, ..., Y^(n-1), U) + W. The model is
// immutable after construction and safe to evaluate from several threads as
// long as the user callbacks are.
class SystemModel {
 public:
  using Dynamics = std::function<Eigen::VectorXd(const Eigen::VectorXd& x, const Eigen::VectorXd& u)>;
  using Jacobian = std::function<Eigen::MatrixXd(const Eigen::VectorXd& x, const Eigen::VectorXd& u)>;

  SystemModel(std::string name, std::size_t m, std::size_t n, Dynamics f, Jacobian jac_u = {},
              Jacobian jac_x = {});

  const std::string& name() const noexcept { return name_; }
  std::size_t m() const noexcept { return m_; }
  std::size_t n() const noexcept { return n_; }
  std::size_t state_dim() const noexcept { return m_ * n_; }

  // F(x, u) with shape and finiteness checks.
  Eigen::VectorXd eval(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;

  bool has_analytic_jacobian_u() const noexcept { return static_cast<bool>(jac_u_); }
  bool has_analytic_jacobian_x() const noexcept { return static_cast<bool>(jac_x_); }

  // Analytic when supplied, else central differences.
  Eigen::MatrixXd jacobian_u(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
  Eigen::MatrixXd jacobian_x(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;

  Eigen::MatrixXd jacobian_u_fd(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
  Eigen::MatrixXd jacobian_x_fd(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;

  // Throws DesignError unless ||F(0,0)||_2 <= tol.
  void require_equilibrium(double tol = 1e-10) const;

  void check_state(const Eigen::VectorXd& x) const;
  void check_input(const Eigen::VectorXd& u) const;

 private:
  std::string name_;
  std::size_t m_;
  std::size_t n_;
  Dynamics f_;
  Jacobian jac_u_;
  Jacobian jac_x_;
};

// Right-hand side of the first-order form: the first (n-1)m entries are the
// shifted columns X_2..X_n, the last m are F(X,U) + W(t,X).
Eigen::VectorXd evaluate_dynamics(const SystemModel& model, const Perturbation& pert, double t,
                                  const Eigen::VectorXd& x, const Eigen::VectorXd& u);
Eigen::VectorXd evaluate_dynamics(const SystemModel& model, const Perturbation& pert, double t,
                                  const StateMatrix& x, const Eigen::VectorXd& u);

// Central-difference step for coordinate value v.
double central_difference_step(double v);

}  // namespace evuas
