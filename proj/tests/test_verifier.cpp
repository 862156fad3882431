#include <doctest.h>

#include <cmath>

#include "evuas/catalog.hpp"
#include "evuas/io.hpp"
#include "evuas/simulator.hpp"
#include "evuas/verifier.hpp"

using namespace evuas;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

HurwitzMatrix example1_hurwitz() {
  MatrixXd a(2, 2);
  a << -1, 2, 0, -1.5;
  return build_hurwitz(a);
}

TrajectoryFactory error_factory(const HurwitzMatrix& h, const Perturbation& w) {
  return [h, w](double t0, const VectorXd& x0, double t_end) {
    SimulationOptions o;
    o.sample_times = uniform_samples(t0, t_end, static_cast<std::size_t>(std::ceil((t_end - t0) * 20)));
    return simulate_error_dynamics(h, w, x0, t0, t_end, o);
  };
}

// x' = a x in any dimension.
TrajectoryFactory scalar_rate(double a) {
  return [a](double t0, const VectorXd& x0, double t_end) {
    Trajectory tr;
    for (std::size_t k = 0; k <= 200; ++k) {
      const double t = t0 + (t_end - t0) * static_cast<double>(k) / 200.0;
      tr.times.push_back(t);
      tr.states.push_back(x0 * std::exp(a * (t - t0)));
    }
    return tr;
  };
}

VerifyOptions base_options() {
  VerifyOptions o;
  o.dim = 2;
  o.delta0 = 1.0;
  o.t0_grid = {0.0, 1.0, 3.0};
  o.eps_levels = {1.0, 0.5, 0.2};
  o.horizon = 12.0;
  o.samples = 6;
  o.seed = 42;
  o.threads = 2;
  return o;
}

}  // namespace

TEST_SUITE("verifier") {

TEST_CASE("unperturbed Hurwitz error dynamics are plainly UAS") {
  const StabilityReport r = verify_evuas(error_factory(example1_hurwitz(), Perturbation::zero(2)), base_options());
  CHECK(r.evus == Verdict::kPass);
  CHECK(r.evua == Verdict::kPass);
  CHECK(r.evuas == Verdict::kPass);
  CHECK(r.alpha0 == 0.0);
  for (const EpsRow& row : r.rows) {
    CAPTURE(row.eps);
    CHECK(row.alpha == 0.0);
    CHECK(row.delta > 0.0);
    CHECK(row.delta <= row.eps);
    CHECK(std::isfinite(row.T));
    CHECK(row.T >= 0.0);
  }
  CHECK(r.witnesses.empty());
  CHECK(r.failures.empty());
  CHECK(r.samples > 0);
}

TEST_CASE("report tables are monotone in epsilon") {
  const StabilityReport r = verify_evuas(error_factory(example1_hurwitz(), Perturbation::zero(2)), base_options());
  for (std::size_t i = 1; i < r.rows.size(); ++i) {
    CHECK(r.rows[i].eps < r.rows[i - 1].eps);
    CHECK(r.rows[i].delta <= r.rows[i - 1].delta);
    CHECK(r.rows[i].T >= r.rows[i - 1].T);
  }
}

TEST_CASE("constant perturbation never passes attraction") {
  VerifyOptions o = base_options();
  o.horizon = 15.0;
  const TrajectoryFactory sim = error_factory(example1_hurwitz(), constant_perturbation(VectorXd::Unit(2, 0)));
  const StabilityReport r = verify_evuas(sim, o);
  CHECK(r.evua == Verdict::kFail);
  CHECK(r.evuas == Verdict::kFail);
  REQUIRE_FALSE(r.witnesses.empty());
  bool saw_evua = false;
  for (const Witness& w : r.witnesses) {
    if (w.property != "evua") continue;
    saw_evua = true;
    CHECK(w.norm == doctest::Approx(1.0).epsilon(0.05));
    CHECK(replay_witness(sim, w, r.horizon, r.norm) == w.norm);
  }
  CHECK(saw_evua);
  const Trajectory tail = sim(0.0, VectorXd::Zero(2), 30.0);
  CHECK(tail.states.back().norm() == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("zero dynamics from the origin only") {
  VerifyOptions o = base_options();
  o.delta0 = 0.0;
  const StabilityReport r = verify_evuas(scalar_rate(0.0), o);
  CHECK(r.radius_levels == std::vector<double>{0.0});
  CHECK(r.evus == Verdict::kPass);
  CHECK(r.evua == Verdict::kPass);
}

TEST_CASE("unstable dynamics fail stability with a replayable witness") {
  VerifyOptions o = base_options();
  o.dim = 1;
  o.horizon = 6.0;
  const TrajectoryFactory sim = scalar_rate(1.0);
  const StabilityReport r = verify_evuas(sim, o);
  CHECK(r.evus == Verdict::kFail);
  CHECK(r.evuas == Verdict::kFail);
  REQUIRE_FALSE(r.witnesses.empty());
  for (const Witness& w : r.witnesses) CHECK(replay_witness(sim, w, r.horizon, r.norm) == w.norm);
}

TEST_CASE("identical seeds give identical reports") {
  const TrajectoryFactory sim = error_factory(example1_hurwitz(), example1_bounded());
  VerifyOptions o = base_options();
  o.eps_levels = {0.8, 0.4};
  o.t0_grid = {0.0, 1.0, 2.0};
  o.horizon = 5.0;
  o.samples = 3;
  const std::string a = io::to_json(verify_evuas(sim, o)).dump();
  o.threads = 1;
  const std::string b = io::to_json(verify_evuas(sim, o)).dump();
  CHECK(a == b);
  o.seed = 43;
  CHECK(io::to_json(verify_evuas(sim, o)).dump() != a);
}

TEST_CASE("option validation") {
  VerifyOptions o = base_options();
  o.eps_levels = {0.2, 0.5};
  CHECK_THROWS_AS(verify_evuas(scalar_rate(-1.0), o), std::invalid_argument);
  o = base_options();
  o.eps_levels = {};
  CHECK_THROWS_AS(verify_evuas(scalar_rate(-1.0), o), std::invalid_argument);
  o = base_options();
  o.dim = 0;
  CHECK_THROWS_AS(verify_evuas(scalar_rate(-1.0), o), std::invalid_argument);
}

TEST_CASE("sphere directions are unit and seeded") {
  const auto a = sphere_directions(5, 20, 3);
  const auto b = sphere_directions(5, 20, 3);
  REQUIRE(a.size() == 20);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].norm() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(a[i] == b[i]);
  }
  CHECK(sphere_directions(5, 20, 4)[0] != a[0]);
}

TEST_CASE("KL envelope of pure exponential decay") {
  const TrajectoryFactory sim = scalar_rate(-1.0);
  std::vector<Trajectory> trs;
  for (const VectorXd& d : sphere_directions(3, 8, 1)) trs.push_back(sim(0.0, 0.7 * d, 8.0));
  const KlEnvelope env = fit_kl_envelope(trs);
  CHECK(env.accepted);
  CHECK(env.mu == doctest::Approx(1.0).epsilon(0.01));
  CHECK(env.kappa == doctest::Approx(1.0).epsilon(0.01));
  CHECK(envelope_holds(env, trs));
}

TEST_CASE("KL envelope of a non-normal Hurwitz matrix") {
  const TrajectoryFactory sim = error_factory(example1_hurwitz(), Perturbation::zero(2));
  std::vector<Trajectory> trs;
  for (const VectorXd& d : sphere_directions(2, 12, 2)) trs.push_back(sim(0.0, d, 20.0));
  const KlEnvelope env = fit_kl_envelope(trs);
  CHECK(env.accepted);
  CHECK(env.mu == doctest::Approx(1.0).epsilon(0.05));
  CHECK(env.kappa >= 1.0);
  CHECK(envelope_holds(env, trs));
}

TEST_CASE("KL envelope rejects non-decaying data") {
  const TrajectoryFactory sim = scalar_rate(0.0);
  std::vector<Trajectory> trs{sim(0.0, VectorXd::Constant(2, 0.5), 5.0)};
  const KlEnvelope env = fit_kl_envelope(trs);
  CHECK_FALSE(env.accepted);
  CHECK(env.mu <= 0.0);
}

TEST_CASE("delta of epsilon") {
  const DeltaEstimate a = estimate_delta_of_eps(scalar_rate(-1.0), 1, 0.1, 0.0, 5.0);
  CHECK(a.delta == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(a.delta <= 0.1);

  const DeltaEstimate b = estimate_delta_of_eps(scalar_rate(1.0), 2, 0.5, 0.0, 5.0);
  CHECK(b.delta == 0.0);
  CHECK_FALSE(b.diagnostics.empty());

  const TrajectoryFactory sim = error_factory(example1_hurwitz(), Perturbation::zero(2));
  const DeltaEstimate c = estimate_delta_of_eps(sim, 2, 1.0, 0.0, 10.0);
  std::vector<Trajectory> trs;
  for (const VectorXd& d : sphere_directions(2, 12, 2)) trs.push_back(sim(0.0, d, 20.0));
  const KlEnvelope env = fit_kl_envelope(trs);
  CHECK(c.delta <= 1.0);
  CHECK(c.delta >= 1.0 / env.kappa * 0.99);

  // Nondecreasing in epsilon.
  double previous = 0.0;
  for (double eps : {0.1, 0.3, 0.6, 1.0}) {
    const double d = estimate_delta_of_eps(sim, 2, eps, 0.0, 10.0).delta;
    CHECK(d >= previous);
    previous = d;
  }
  CHECK_THROWS_AS(estimate_delta_of_eps(sim, 2, 0.0, 0.0, 10.0), std::invalid_argument);
}

}  // TEST_SUITE
