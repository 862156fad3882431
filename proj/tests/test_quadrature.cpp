#include <doctest.h>

#include <cmath>
#include <numbers>

#include "evuas/errors.hpp"
#include "evuas/quadrature.hpp"
#include "evuas/signals.hpp"

using namespace evuas;

namespace {

TimeSignal scalar(std::function<double(double)> f, FrequencyHint hint = {}) {
  return TimeSignal{1, [f](double t, std::span<double> y) { y[0] = f(t); }, std::move(hint)};
}

}  // namespace

TEST_SUITE("quadrature") {

TEST_CASE("smooth integrands") {
  const auto s = scalar([](double t) { return std::sin(t); });
  double err = 0.0;
  CHECK(integrate(s, 0.0, std::numbers::pi, {}, &err)[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(err <= 1e-10);
  CHECK(integrate(scalar([](double t) { return t * t; }), -1.0, 2.0)[0] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(integrate(scalar([](double) { return 0.0; }), 3.0, 9.0)[0] == 0.0);
}

// Closed forms: int cos(e^s) = Ci(e^s), int sin(e^s) = Si(e^s),
// int s cos(s^4) = sqrt(2 pi)/4 C(s^2 sqrt(2/pi)) (scipy.special reference values).
TEST_CASE("oscillatory integrands against special-function closed forms") {
  const auto cos_exp = find_signal("cos_exp")->signal;
  CHECK(integrate(cos_exp, 0.0, 3.0)[0] == doctest::Approx(-0.2914110546768135).epsilon(1e-9));
  const auto vec = find_signal("vec_cos_sin_exp")->signal;
  CHECK(integrate(vec, 0.0, 5.0)[1] == doctest::Approx(0.62963579564892058).epsilon(1e-9));
  const auto tc = find_signal("t_cos_t4")->signal;
  CHECK(integrate(tc, 0.0, 5.0)[0] == doctest::Approx(0.31509656870023445).epsilon(1e-9));
}

TEST_CASE("cumulative integral is consistent with direct integration") {
  const auto tc = find_signal("t_cos_t4")->signal;
  const CumulativeIntegral ci = cumulative_integral(tc, 2.0, 3.0);
  REQUIRE(ci.size() >= 2);
  CHECK(ci.nodes.front() == 2.0);
  CHECK(ci.nodes.back() == 3.0);
  CHECK(ci.at(0, 0) == 0.0);
  for (std::size_t k = 1; k < ci.size(); ++k) CHECK(ci.nodes[k] > ci.nodes[k - 1]);
  for (std::size_t k : {ci.size() / 3, ci.size() / 2, ci.size() - 1}) {
    const double direct = integrate(tc, 2.0, ci.nodes[k])[0];
    CHECK(ci.at(0, k) == doctest::Approx(direct).epsilon(1e-9));
  }
  CHECK(ci.error_bound <= 1e-10);
}

TEST_CASE("mesh resolves the local period") {
  const auto tc = find_signal("t_cos_t4")->signal;
  QuadratureOptions opts;
  const auto mesh = oscillation_aware_mesh(tc, 5.0, 6.0, opts);
  for (std::size_t k = 1; k < mesh.size(); ++k) {
    const double mid = 0.5 * (mesh[k] + mesh[k - 1]);
    const double period = 2.0 * std::numbers::pi / tc.freq_hint(mid);
    CHECK(mesh[k] - mesh[k - 1] <= period / opts.panels_per_period * 1.5);
  }
  // Without a hint the sign-change scan still refines the mesh.
  auto blind = tc;
  blind.freq_hint = {};
  CHECK(oscillation_aware_mesh(blind, 5.0, 6.0, opts).size() > 256);
}

TEST_CASE("tolerance is respected across a sweep") {
  const auto cos_exp = find_signal("cos_exp")->signal;
  const double exact = -0.2914110546768135;
  for (double tol : {1e-6, 1e-8, 1e-10}) {
    QuadratureOptions o;
    o.abs_tol = tol;
    double err = 0.0;
    const double v = integrate(cos_exp, 0.0, 3.0, o, &err)[0];
    CHECK(std::abs(v - exact) <= std::max(10.0 * tol, 1e-13));
    CHECK(err <= tol);
  }
}

TEST_CASE("budget exhaustion is reported") {
  const auto tc = find_signal("t_cos_t4")->signal;
  QuadratureOptions o;
  o.max_evaluations = 200;
  CHECK_THROWS_AS(integrate(tc, 0.0, 8.0, o), BudgetExceeded);
}

TEST_CASE("non-finite integrand is an evaluation error") {
  const auto bad = scalar([](double t) { return t > 0.5 ? std::nan("") : 1.0; });
  CHECK_THROWS_AS(integrate(bad, 0.0, 1.0), EvaluationError);
}

}  // TEST_SUITE
