#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "evuas/norms.hpp"
#include "evuas/system_model.hpp"
#include "evuas/tracking.hpp"

namespace evuas {

using Complex = std::complex<double>;
using PoleSet = std::vector<Complex>;

// Gamma matrix of the tracking error E = Diag(Delta [Gamma; 1]) and the
// constants of its companion subsystem.
struct GammaDesign {
  Eigen::MatrixXd gamma;        // (n-1) x m, column j = (gamma_1j, ..., gamma_{n-1,j})
  std::vector<PoleSet> poles;   // declared roots per column
  double gamma_star = 1.0;
  double mu_gamma = 0.0;
  double kappa = 1.0;
  Norm norm = Norm::kEuclidean;

  std::size_t m() const noexcept { return static_cast<std::size_t>(gamma.cols()); }
  std::size_t n() const noexcept { return static_cast<std::size_t>(gamma.rows()) + 1; }

  // E = Diag(Delta [Gamma; 1]) for Delta given as m x n.
  Eigen::VectorXd tracking_error(const Eigen::MatrixXd& delta) const;
  // Diag(Delta [0; Gamma]).
  Eigen::VectorXd shifted_term(const Eigen::MatrixXd& delta) const;
  // Monic coefficients (c_0, ..., c_{n-2}, 1) of column j.
  Eigen::VectorXd polynomial(std::size_t j) const;
  // (n-1) x (n-1) companion matrix of column j's subsystem.
  Eigen::MatrixXd companion(std::size_t j) const;
};

// Expands prod (z - p) per column. Rejects n < 2, wrong multiset sizes,
// Re p >= 0 and sets that are not closed under conjugation.
GammaDesign build_gamma(const std::vector<PoleSet>& poles_per_column, std::size_t n,
                        Norm norm = Norm::kEuclidean);

// sup_t ||exp(C t)|| over [0, horizon] on `points` samples, for block-diagonal C.
double transition_overshoot(const GammaDesign& design, double horizon, std::size_t points = 2001);

// Monic real coefficients (ascending, leading 1) of prod (z - p).
Eigen::VectorXd monic_from_roots(const PoleSet& roots);
// Roots of a monic polynomial via its companion eigenvalues.
PoleSet roots_of_monic(const Eigen::VectorXd& coeffs);

struct HurwitzMatrix {
  Eigen::MatrixXd a_h;
  std::vector<Complex> eigenvalues;
  double max_real_part = 0.0;
};

HurwitzMatrix build_hurwitz(const Eigen::MatrixXd& a_h);
HurwitzMatrix default_hurwitz(std::size_t m);

struct NonsingularReport {
  bool levy_desplanques = false;
  bool numeric_nonsingular = false;
  double condition_estimate = 0.0;
};

NonsingularReport check_nonsingular(const Eigen::MatrixXd& b);

struct NewtonConfig {
  double tol = 1e-12;
  int max_iterations = 50;
  int max_halvings = 6;
};

struct ControllerEval {
  Eigen::VectorXd u;
  double residual = 0.0;
  int iterations = 0;
};

// Newton failed at x: iterate left the implicit-function neighborhood, or
// J_{F,U} became singular.
class ControllerError : public std::runtime_error {
 public:
  ControllerError(const std::string& what, Eigen::VectorXd x, double residual, int iterations,
                  bool singular)
      : std::runtime_error(what), x_(std::move(x)), residual_(residual), iterations_(iterations),
        singular_(singular) {}
  const Eigen::VectorXd& state() const noexcept { return x_; }
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }
  bool singular() const noexcept { return singular_; }

 private:
  Eigen::VectorXd x_;
  double residual_;
  int iterations_;
  bool singular_;
};

struct ValidityFailure {
  double radius;
  std::size_t direction;
  double residual;
  int iterations;
  bool singular;
};

struct ValidityLog {
  double last_good_radius = 0.0;
  double probe_limit = 0.0;
  std::vector<ValidityFailure> failures;
};

struct ValidityProbeOptions {
  std::size_t directions = 16;
  double min_radius = 1e-3;
  double max_radius = 1e3;
  double growth = 2.0;
  std::uint64_t seed = 5;
};

// Either the implicit Newton feedback U = G(X) solving Ftilde(X, U) = 0, or
// a linear gain U = G_lin X. Immutable; warm starts are owned by callers.
class Controller {
 public:
  enum class Mode { kImplicitNewton, kLinearGain };

  Mode mode() const noexcept { return mode_; }
  const SystemModel& model() const noexcept { return *model_; }
  std::shared_ptr<const SystemModel> model_ptr() const noexcept { return model_; }

  // Implicit mode only.
  const GammaDesign& design() const;
  const HurwitzMatrix& hurwitz() const;
  const NewtonConfig& newton() const noexcept { return newton_; }
  const ValidityLog& validity() const noexcept { return validity_; }

  // Linear mode only.
  const Eigen::MatrixXd& gain() const;

  // U = G(X). `warm` seeds Newton (default 0). Throws ControllerError.
  ControllerEval evaluate(const Eigen::VectorXd& x, const Eigen::VectorXd* warm = nullptr) const;
  // U = G(t, Delta) for the tracking problem.
  ControllerEval evaluate_tracking(double t, const Eigen::VectorXd& delta, const TrackingSpec& spec,
                                   const Eigen::VectorXd* warm = nullptr) const;

  // Ftilde(X, U) for stabilization.
  Eigen::VectorXd residual(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;

  static Controller implicit(std::shared_ptr<const SystemModel> model, GammaDesign design,
                             HurwitzMatrix hurwitz, NewtonConfig newton);
  static Controller linear(std::shared_ptr<const SystemModel> model, Eigen::MatrixXd gain);

 private:
  friend Controller synthesize_feedback(const SystemModel&, GammaDesign, HurwitzMatrix, NewtonConfig,
                                        const ValidityProbeOptions&);

  // U-independent part of Ftilde: Diag(D[0;Gamma]) - Y_d^(n) - A_H E.
  Eigen::VectorXd offset(const Eigen::MatrixXd& delta, const Eigen::VectorXd* y_d_n) const;
  ControllerEval solve(const Eigen::VectorXd& x_eval, const Eigen::VectorXd& offset,
                       const Eigen::VectorXd* warm) const;

  Mode mode_ = Mode::kImplicitNewton;
  std::shared_ptr<const SystemModel> model_;
  std::shared_ptr<const GammaDesign> design_;
  std::shared_ptr<const HurwitzMatrix> hurwitz_;
  Eigen::MatrixXd gain_;
  NewtonConfig newton_;
  ValidityLog validity_;
};

// Requires F(0,0) = 0 and a numerically nonsingular J_{F,U}(0,0). Probes the
// Newton solve along rays to record the last radius where it succeeded.
Controller synthesize_feedback(const SystemModel& model, GammaDesign design, HurwitzMatrix hurwitz,
                               NewtonConfig newton = {}, const ValidityProbeOptions& probe = {});

enum class CoercivityVerdict { kCoercive, kNonCoercive, kInconclusive };
std::string to_string(CoercivityVerdict v);

struct CoercivityProbe {
  CoercivityVerdict verdict = CoercivityVerdict::kInconclusive;
  std::vector<double> radii;
  // phi[s][r][k]: Phi_X at sample s, ray r, radius index k (NaN for excluded rays).
  std::vector<std::vector<std::vector<double>>> phi;
  std::vector<CoercivityVerdict> per_sample;
  std::size_t excluded_rays = 0;
};

CoercivityProbe coercivity_probe(const SystemModel& model, const std::vector<Eigen::VectorXd>& x_samples,
                                 std::size_t ray_count, const std::vector<double>& radii,
                                 std::uint64_t seed = 3);

struct Linearization {
  Eigen::MatrixXd a;  // mn x mn
  Eigen::MatrixXd b;  // mn x m
};

Linearization linearize(const SystemModel& model);
Eigen::Index controllability_rank(const Linearization& lin);

struct PlacementReport {
  Eigen::MatrixXd gain;
  std::vector<Complex> closed_loop_eigenvalues;
  double spectrum_error = 0.0;   // max distance between matched eigenvalues
  double charpoly_error = 0.0;   // max relative coefficient mismatch
  bool block_diagonal = true;    // false when the single-chain fallback was used
};

PlacementReport place_poles(const SystemModel& model, const PoleSet& desired);
Controller linearize_and_place(const SystemModel& model, const PoleSet& desired);

// Characteristic polynomial (ascending, monic) by Faddeev-LeVerrier.
Eigen::VectorXd characteristic_polynomial(const Eigen::MatrixXd& a);

struct RoaEstimate {
  double r_max = 0.0;
  double epsilon = 0.0;
  double delta_E_of_eps = 0.0;
  double theta1 = 1.0;
  double theta2 = 1.0;
  double delta_star_E = 0.0;
  double delta_star_X = 0.0;
  double delta_star = 0.0;
};

RoaEstimate estimate_roa(double gamma_star, double kappa, double mu_gamma, double r_max, double epsilon,
                         double delta_E_of_eps, double theta1, double theta2, std::size_t m);
RoaEstimate estimate_roa(const GammaDesign& design, double r_max, double epsilon, double delta_E_of_eps,
                         double theta1, double theta2, std::size_t m);

}  // namespace evuas
