#include <doctest.h>

#include <cmath>
#include <random>
#include <thread>

#include "evuas/catalog.hpp"
#include "evuas/errors.hpp"
#include "evuas/simulator.hpp"

using namespace evuas;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

HurwitzMatrix example1_hurwitz() {
  MatrixXd a(2, 2);
  a << -1, 2, 0, -1.5;
  return build_hurwitz(a);
}

// Chain m = 1, n = 2, gamma = 1, A_H = -1: the loop is x1' = x2, x2' = -x1 - 2 x2.
Controller affine_controller() {
  return synthesize_feedback(chain_model(1, 2), build_gamma({{-1.0}}, 2), build_hurwitz(MatrixXd::Constant(1, 1, -1.0)));
}

// Repeated eigenvalue -1 from (a, 0): x1 = a (1 + t) e^-t.
double repeated_root_x1(double a, double t) { return a * (1.0 + t) * std::exp(-t); }

// Reference values from tests/oracles/closed_loop_oracle.py: sup ||x|| over
// [9, 10] of the loop above driven by cos(e^t) on the second channel.
constexpr double kOracleTail05 = 4.010852e-04;
constexpr double kOracleTail03 = 7.292977e-04;

SimulationOptions sampled(double t0, double t1, std::size_t n, double tol = 1e-9) {
  SimulationOptions o;
  o.tol = tol;
  o.sample_times = uniform_samples(t0, t1, n);
  return o;
}

}  // namespace

TEST_SUITE("simulator") {

TEST_CASE("error dynamics without perturbation follow the closed form") {
  const Trajectory tr =
      simulate_error_dynamics(example1_hurwitz(), Perturbation::zero(2), vec({-1.0, 1.5}), 0.0, 5.0, sampled(0, 5, 250));
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const double t = tr.times[k];
    CHECK(tr.states[k](0) == doctest::Approx(5 * std::exp(-t) - 6 * std::exp(-1.5 * t)).epsilon(1e-7).scale(1));
    CHECK(tr.states[k](1) == doctest::Approx(1.5 * std::exp(-1.5 * t)).epsilon(1e-7).scale(1));
  }
  CHECK(tr.inputs.empty());
}

TEST_CASE("constant perturbation drives the error to (1, 0)") {
  const Trajectory tr = simulate_error_dynamics(example1_hurwitz(), constant_perturbation(vec({1.0, 0.0})),
                                                vec({-1.0, 1.5}), 0.0, 30.0, sampled(0, 30, 300));
  CHECK((tr.states.back() - vec({1.0, 0.0})).norm() < 1e-6);
}

TEST_CASE("zero state stays at zero in closed loop") {
  const Controller g = affine_controller();
  const Trajectory tr = simulate_closed_loop(g, Perturbation::zero(1), vec({0, 0}), 0.0, 10.0, sampled(0, 10, 50));
  for (const VectorXd& x : tr.states) CHECK(x == VectorXd::Zero(2));
  REQUIRE(tr.inputs.size() == tr.size());
  for (const VectorXd& u : tr.inputs) CHECK(u == VectorXd::Zero(1));
}

TEST_CASE("affine closed loop decays like the repeated-root solution") {
  const Controller g = affine_controller();
  const Trajectory tr = simulate_closed_loop(g, Perturbation::zero(1), vec({0.5, 0}), 0.0, 20.0, sampled(0, 20, 200));
  for (std::size_t k = 0; k < tr.size(); ++k)
    CHECK(std::abs(tr.states[k](0) - repeated_root_x1(0.5, tr.times[k])) < 1e-7);
  CHECK(tr.states.back().norm() < 1e-4);
  // Recorded inputs are the controller's answer at the recorded states.
  for (std::size_t k = 0; k < tr.size(); k += 20)
    CHECK(tr.inputs[k](0) == doctest::Approx(g.evaluate(tr.states[k]).u(0)).epsilon(1e-12));
}

TEST_CASE("closed loop with a diminishing perturbation settles near zero") {
  const Controller g = affine_controller();
  SimulationOptions o = sampled(0, 10, 5000, 1e-10);
  const Trajectory tr = simulate_closed_loop(g, make_perturbation("cos_exp", 1), vec({0.5, 0}), 0.0, 10.0, o);
  const double tail = tr.sup_norm_after(9.0);
  CHECK(tail < 2.0 * kOracleTail05);
  CHECK(tail == doctest::Approx(kOracleTail05).epsilon(0.05));
  CHECK(tr.diagnostics.controller_failures == 0);
}

TEST_CASE("tracking with X_d = 0 has the closed-loop right-hand side bitwise") {
  const Controller g = synthesize_feedback(cubic_model(2, 2), build_gamma({{-1.0}, {-2.0}}, 2), default_hurwitz(2));
  const TrackingSpec zero = make_tracking("zero", 2, 2);
  const Perturbation w = make_perturbation("vec_cos_sin_exp", 2);
  const Rhs a = closed_loop_rhs(g, w, std::make_shared<FeedbackCache>());
  const Rhs b = tracking_rhs(g, zero, w, std::make_shared<FeedbackCache>());
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n;
  for (int k = 0; k < 50; ++k) {
    VectorXd x(4), da, db;
    for (auto& v : x) v = n(rng);
    const double t = 3.0 * std::abs(n(rng));
    a(t, x, da);
    b(t, x, db);
    CHECK(da == db);
  }
  const Trajectory ta = simulate_closed_loop(g, w, vec({0.2, -0.1, 0.3, 0.0}), 0.0, 3.0);
  const Trajectory tb = simulate_tracking(g, zero, w, vec({0.2, -0.1, 0.3, 0.0}), 0.0, 3.0);
  REQUIRE(ta.size() == tb.size());
  CHECK(ta.states.back() == tb.states.back());
}

TEST_CASE("sinusoidal reference is tracked") {
  const Controller g = affine_controller();
  const TrackingSpec sin_ref = make_tracking("sin", 1, 2);
  CHECK(sin_ref.consistency_error(0.0, 10.0) < 1e-4);
  CHECK(sin_ref.admissibility_error(g.model(), 0.0, 10.0) == 0.0);
  const Trajectory tr =
      simulate_tracking(g, sin_ref, Perturbation::zero(1), vec({0.3, 0.0}), 0.0, 15.0, sampled(0, 15, 150));
  for (std::size_t k = 0; k < tr.size(); ++k)
    CHECK(std::abs(tr.states[k](0) - repeated_root_x1(0.3, tr.times[k])) < 1e-7);
  CHECK(tr.states.back().norm() < 1e-4);
}

TEST_CASE("tracking error decays under a diminishing perturbation") {
  const Controller g = affine_controller();
  const Trajectory tr = simulate_tracking(g, make_tracking("sin", 1, 2), make_perturbation("cos_exp", 1), vec({0.3, 0.0}),
                                          0.0, 10.0, sampled(0, 10, 5000, 1e-10));
  const double tail = tr.sup_norm_after(9.0);
  CHECK(tail < 2.0 * kOracleTail03);
  CHECK(tail == doctest::Approx(kOracleTail03).epsilon(0.05));
}

TEST_CASE("inadmissible reference is rejected") {
  const Controller g = synthesize_feedback(chain_model(1, 2, 1.0, 0.5), build_gamma({{-1.0}}, 2), default_hurwitz(1));
  const TrackingSpec sin_ref = make_tracking("sin", 1, 2);
  CHECK(sin_ref.admissibility_error(g.model(), 0.0, 10.0) > 0.1);
  CHECK_THROWS_AS(simulate_tracking(g, sin_ref, Perturbation::zero(1), vec({0, 0}), 0.0, 1.0), DesignError);
}

TEST_CASE("controller failure stops the simulation with its residual") {
  const Controller g = synthesize_feedback(tanh_model(1, 2), build_gamma({{-1.0}}, 2), default_hurwitz(1));
  try {
    (void)simulate_closed_loop(g, Perturbation::zero(1), vec({5.0, 0.0}), 0.0, 5.0);
    FAIL("expected a simulation error");
  } catch (const SimulationError& e) {
    CHECK(e.controller_failure());
    CHECK(e.residual() > 0.0);
    CHECK(e.state().size() == 2);
  }
  // A small start stays inside the neighborhood.
  CHECK(simulate_closed_loop(g, Perturbation::zero(1), vec({0.1, 0.0}), 0.0, 5.0).states.back().norm() < 0.01);
}

TEST_CASE("controller is shareable across concurrent simulations") {
  const Controller g = synthesize_feedback(cubic_model(1, 2), build_gamma({{-1.0}}, 2), default_hurwitz(1));
  const Perturbation w = make_perturbation("cos_exp", 1);
  std::vector<VectorXd> serial, parallel(8);
  for (int k = 0; k < 8; ++k)
    serial.push_back(simulate_closed_loop(g, w, vec({0.1 * k, -0.05 * k}), 0.0, 4.0).states.back());
  std::vector<std::thread> pool;
  for (int k = 0; k < 8; ++k)
    pool.emplace_back([&, k] { parallel[k] = simulate_closed_loop(g, w, vec({0.1 * k, -0.05 * k}), 0.0, 4.0).states.back(); });
  for (auto& th : pool) th.join();
  for (int k = 0; k < 8; ++k) CHECK(serial[k] == parallel[k]);
}

TEST_CASE("linear-gain controller closes the loop") {
  const Controller lin = linearize_and_place(chain_model(1, 2), {-2.0, -3.0});
  const Trajectory tr = simulate_closed_loop(lin, Perturbation::zero(1), vec({1.0, 0.0}), 0.0, 5.0, sampled(0, 5, 10));
  // x1 = 3 e^-2t - 2 e^-3t
  for (std::size_t k = 0; k < tr.size(); ++k)
    CHECK(std::abs(tr.states[k](0) - (3 * std::exp(-2 * tr.times[k]) - 2 * std::exp(-3 * tr.times[k]))) < 1e-7);
}

}  // TEST_SUITE
