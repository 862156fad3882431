#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "evuas/integrator.hpp"
#include "evuas/simd/kernels.hpp"

using namespace evuas;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

const Rhs kDecay = [](double, const VectorXd& x, VectorXd& dx) { dx = -x; };

// E' = A_H E with A_H = [[-1, 2], [0, -1.5]].
const Rhs kTriangular = [](double, const VectorXd& e, VectorXd& de) {
  de.resize(2);
  de(0) = -e(0) + 2.0 * e(1);
  de(1) = -1.5 * e(1);
};

VectorXd triangular_exact(double t) { return vec({5.0 * std::exp(-t) - 6.0 * std::exp(-1.5 * t), 1.5 * std::exp(-1.5 * t)}); }

// Forced Van der Pol oscillator; no closed form.
const Rhs kForcedVdp = [](double t, const VectorXd& x, VectorXd& dx) {
  dx.resize(2);
  dx(0) = x(1);
  dx(1) = 1.5 * (1.0 - x(0) * x(0)) * x(1) - x(0) + 0.8 * std::cos(1.7 * t);
};

// Classical fixed-step RK4, the independent reference.
VectorXd rk4(const Rhs& f, double t0, VectorXd x, double t1, int steps) {
  const double h = (t1 - t0) / steps;
  VectorXd k1, k2, k3, k4;
  for (int i = 0; i < steps; ++i) {
    const double t = t0 + i * h;
    f(t, x, k1);
    f(t + h / 2, x + h / 2 * k1, k2);
    f(t + h / 2, x + h / 2 * k2, k3);
    f(t + h, x + h * k3, k4);
    x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return x;
}

}  // namespace

TEST_SUITE("integrator") {

TEST_CASE("constant solution") {
  const Rhs still = [](double, const VectorXd& x, VectorXd& dx) { dx = VectorXd::Zero(x.size()); };
  const Trajectory tr = integrate(still, 0.0, vec({3.0, -2.0}), 7.0);
  tr.check_invariants();
  for (const VectorXd& x : tr.states) CHECK(x == vec({3.0, -2.0}));
  CHECK(tr.times.front() == 0.0);
  CHECK(tr.times.back() == 7.0);
}

TEST_CASE("scalar exponential reaches e^-1") {
  const Trajectory tr = integrate(kDecay, 0.0, vec({1.0}), 1.0);
  CHECK(std::abs(tr.states.back()(0) - std::exp(-1.0)) < 1e-8);
  CHECK(tr.diagnostics.accepted_steps > 0);
  CHECK(tr.diagnostics.rhs_evaluations >= 6 * tr.diagnostics.accepted_steps);
}

TEST_CASE("triangular system matches its closed form") {
  IntegratorOptions o;
  o.tol = 1e-9;
  o.sample_times = uniform_samples(0.0, 5.0, 500);
  const Trajectory tr = integrate(kTriangular, 0.0, vec({-1.0, 1.5}), 5.0, o);
  REQUIRE(tr.size() == 501);
  double worst = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k)
    worst = std::max(worst, (tr.states[k] - triangular_exact(tr.times[k])).cwiseAbs().maxCoeff());
  CHECK(worst < 1e-6);
  const VectorXd at1 = triangular_exact(1.0);
  CHECK(at1(0) == doctest::Approx(0.500616).epsilon(1e-6));
  CHECK(at1(1) == doctest::Approx(0.334695).epsilon(1e-6));
}

TEST_CASE("error shrinks with the tolerance") {
  double previous = INFINITY;
  for (double tol : {1e-4, 1e-6, 1e-8, 1e-10}) {
    IntegratorOptions o;
    o.tol = tol;
    const Trajectory tr = integrate(kTriangular, 0.0, vec({-1.0, 1.5}), 5.0, o);
    const double err = (tr.states.back() - triangular_exact(5.0)).norm();
    CAPTURE(tol);
    CHECK(err < 100.0 * tol);
    CHECK(err < previous);
    previous = err;
  }
}

TEST_CASE("agrees with an independent fixed-step RK4") {
  IntegratorOptions o;
  o.tol = 1e-10;
  o.sample_times = {2.5, 5.0, 10.0};
  const Trajectory tr = integrate(kForcedVdp, 0.0, vec({0.5, 0.0}), 10.0, o);
  CHECK((tr.states[1] - rk4(kForcedVdp, 0.0, vec({0.5, 0.0}), 2.5, 20000)).norm() < 1e-7);
  CHECK((tr.states[3] - rk4(kForcedVdp, 0.0, vec({0.5, 0.0}), 10.0, 80000)).norm() < 1e-7);
}

TEST_CASE("dense output between steps") {
  IntegratorOptions o;
  o.tol = 1e-10;
  o.sample_times = uniform_samples(0.0, 3.0, 997);
  const Trajectory tr = integrate(kDecay, 0.0, vec({1.0}), 3.0, o);
  REQUIRE(tr.size() == 998);
  double worst = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k) worst = std::max(worst, std::abs(tr.states[k](0) - std::exp(-tr.times[k])));
  CHECK(worst < 1e-8);
  // Far fewer steps than samples.
  CHECK(tr.diagnostics.accepted_steps < 200);
}

TEST_CASE("frequency hint caps the step") {
  IntegratorOptions o;
  o.freq_hint = [](double t) { return 4.0 * t * t * t + 1.0; };
  const Rhs osc = [](double t, const VectorXd&, VectorXd& dx) { dx = vec({t * std::cos(t * t * t * t)}); };
  const Trajectory tr = integrate(osc, 0.0, vec({0.0}), 6.0, o);
  const double period_at_end = 2.0 * std::numbers::pi / (4.0 * 216.0 + 1.0);
  CHECK(tr.diagnostics.min_step <= period_at_end / 8.0 * 1.0001);
  for (std::size_t k = 1; k < tr.size(); ++k) {
    const double w = o.freq_hint(tr.times[k - 1]);
    CHECK(tr.times[k] - tr.times[k - 1] <= 2.0 * std::numbers::pi / w / 8.0 * (1.0 + 1e-12));
  }
}

TEST_CASE("max step option is honoured") {
  IntegratorOptions o;
  o.max_step = 0.01;
  const Trajectory tr = integrate(kDecay, 0.0, vec({1.0}), 1.0, o);
  CHECK(tr.diagnostics.max_step <= 0.01 + 1e-15);
  CHECK(tr.size() >= 100);
}

TEST_CASE("identical results on both SIMD backends") {
  const simd::Backend original = simd::backend();
  simd::set_backend(simd::Backend::kScalar);
  const Trajectory a = integrate(kForcedVdp, 0.0, vec({0.5, 0.0}), 10.0);
  if (simd::available(simd::Backend::kAvx2)) {
    simd::set_backend(simd::Backend::kAvx2);
    const Trajectory b = integrate(kForcedVdp, 0.0, vec({0.5, 0.0}), 10.0);
    CHECK((a.states.back() - b.states.back()).norm() < 1e-7);
  }
  simd::set_backend(original);
}

TEST_CASE("failures carry time, state and the partial trajectory") {
  // x' = x^2 blows up at t = 1.
  const Rhs blowup = [](double, const VectorXd& x, VectorXd& dx) { dx = x.array().square(); };
  try {
    (void)integrate(blowup, 0.0, vec({1.0}), 2.0);
    FAIL("expected an integration error");
  } catch (const IntegrationError& e) {
    CHECK((e.kind() == IntegrationError::Kind::kMinStep || e.kind() == IntegrationError::Kind::kNonFinite));
    CHECK(e.time() == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(e.partial().size() >= 2);
    e.partial().check_invariants();
  }

  const Rhs throws = [](double t, const VectorXd& x, VectorXd& dx) {
    if (t > 0.5) throw std::runtime_error("boom");
    dx = -x;
  };
  try {
    (void)integrate(throws, 0.0, vec({1.0}), 1.0);
    FAIL("expected an integration error");
  } catch (const IntegrationError& e) {
    CHECK(e.kind() == IntegrationError::Kind::kRhsFailure);
    CHECK(e.time() > 0.5);
    CHECK(e.partial().times.back() <= e.time());
  }

  IntegratorOptions budget;
  budget.max_steps = 5;
  budget.max_step = 0.01;
  CHECK_THROWS_AS(integrate(kDecay, 0.0, vec({1.0}), 1.0, budget), IntegrationError);
  CHECK_THROWS_AS(integrate(kDecay, 1.0, vec({1.0}), 1.0), std::invalid_argument);
}

TEST_CASE("trajectory helpers") {
  IntegratorOptions o;
  o.sample_times = uniform_samples(0.0, 4.0, 40);
  const Trajectory tr = integrate(kTriangular, 0.0, vec({-1.0, 1.5}), 4.0, o);
  const auto norms = tr.state_norms();
  REQUIRE(norms.size() == tr.size());
  for (std::size_t k = 0; k < tr.size(); ++k) CHECK(norms[k] == doctest::Approx(tr.states[k].norm()).epsilon(1e-14));
  double tail = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k)
    if (tr.times[k] >= 3.0) tail = std::max(tail, norms[k]);
  CHECK(tr.sup_norm_after(3.0) == tail);
  CHECK(uniform_samples(0.0, 1.0, 4) == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});

  Trajectory bad = tr;
  bad.times[2] = bad.times[1];
  CHECK_THROWS_AS(bad.check_invariants(), std::logic_error);
}

}  // TEST_SUITE
