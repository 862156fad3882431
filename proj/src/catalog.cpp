#include "evuas/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "evuas/signals.hpp"

namespace evuas {

namespace {

Eigen::Map<const Eigen::MatrixXd> as_matrix(const Eigen::VectorXd& x, std::size_t m, std::size_t n) {
  return {x.data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)};
}

double param(const Params& p, const std::string& key, double fallback) {
  const auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

void allow_only(const Params& p, std::initializer_list<const char*> keys, const std::string& owner) {
  for (const auto& [k, v] : p) {
    bool known = false;
    for (const char* allowed : keys) known = known || k == allowed;
    if (!known) throw std::invalid_argument(owner + ": unknown parameter '" + k + "'");
  }
}

}  // namespace

SystemModel chain_model(std::size_t m, std::size_t n, double input_gain, double coupling) {
  if (input_gain == 0.0) throw std::invalid_argument("chain: input_gain must be nonzero");
  const auto mi = static_cast<Eigen::Index>(m);
  auto f = [m, n, input_gain, coupling](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    return Eigen::VectorXd(input_gain * u + coupling * as_matrix(x, m, n).col(0));
  };
  auto ju = [mi, input_gain](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::MatrixXd(input_gain * Eigen::MatrixXd::Identity(mi, mi));
  };
  auto jx = [mi, n, coupling](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(mi, mi * static_cast<Eigen::Index>(n));
    j.leftCols(mi) = coupling * Eigen::MatrixXd::Identity(mi, mi);
    return j;
  };
  return SystemModel("chain", m, n, f, ju, jx);
}

SystemModel cubic_model(std::size_t m, std::size_t n) {
  const auto d = static_cast<Eigen::Index>(m * n);
  auto f = [](const Eigen::VectorXd&, const Eigen::VectorXd& u) {
    return Eigen::VectorXd(u + u.cwiseProduct(u).cwiseProduct(u));
  };
  auto ju = [](const Eigen::VectorXd&, const Eigen::VectorXd& u) {
    return Eigen::MatrixXd((1.0 + 3.0 * u.array().square()).matrix().asDiagonal());
  };
  auto jx = [d](const Eigen::VectorXd&, const Eigen::VectorXd& u) { return Eigen::MatrixXd::Zero(u.size(), d).eval(); };
  return SystemModel("cubic", m, n, f, ju, jx);
}

SystemModel tanh_model(std::size_t m, std::size_t n) {
  const auto d = static_cast<Eigen::Index>(m * n);
  auto f = [](const Eigen::VectorXd&, const Eigen::VectorXd& u) { return Eigen::VectorXd(u.array().tanh()); };
  auto ju = [](const Eigen::VectorXd&, const Eigen::VectorXd& u) {
    return Eigen::MatrixXd((1.0 - u.array().tanh().square()).matrix().asDiagonal());
  };
  auto jx = [d](const Eigen::VectorXd&, const Eigen::VectorXd& u) { return Eigen::MatrixXd::Zero(u.size(), d).eval(); };
  return SystemModel("tanh", m, n, f, ju, jx);
}

SystemModel make_model(const std::string& name, std::size_t m, std::size_t n, const Params& params) {
  if (name == "chain") {
    allow_only(params, {"input_gain", "coupling"}, "chain");
    return chain_model(m, n, param(params, "input_gain", 1.0), param(params, "coupling", 0.0));
  }
  if (name == "cubic") {
    allow_only(params, {}, "cubic");
    return cubic_model(m, n);
  }
  if (name == "tanh") {
    allow_only(params, {}, "tanh");
    return tanh_model(m, n);
  }
  throw std::invalid_argument("unknown model '" + name + "'");
}

const std::vector<CatalogEntry>& model_catalog() {
  static const std::vector<CatalogEntry> c{
      {"chain", "F = b U + c Y (affine; params input_gain b, coupling c)"},
      {"cubic", "F = U + U^3 (coercive, nonlinear in U)"},
      {"tanh", "F = tanh(U) (non-coercive, J_{F,U}(0,0) = I)"},
  };
  return c;
}

Perturbation example1_unbounded() {
  TimeSignal w{2,
               [](double t, std::span<double> y) {
                 const double t2 = t * t;
                 const double ph = t2 * t2;
                 y[0] = 0.5 * t * std::sin(ph);
                 y[1] = -t * std::cos(ph);
               },
               [](double t) { return 4.0 * t * t * t; }};
  Perturbation p = Perturbation::time_only(std::move(w));
  p.name = "example1_unbounded";
  p.flags = {false, true};
  return p;
}

Perturbation example1_bounded() {
  auto d = [](double t) {
    const double e = std::exp(t);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
    m(0, 0) = std::sin(e);
    m(1, 1) = std::cos(e);
    return m;
  };
  auto k = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd out(2);
    out[0] = -x[1];
    out[1] = 2.0 * (std::cbrt(x[0]) + x[1] + 1.0);
    return out;
  };
  Perturbation p = Perturbation::factored(2, d, k, [](double t) { return std::exp(t); });
  p.name = "example1_bounded";
  p.flags = {true, true};
  return p;
}

Perturbation constant_perturbation(const Eigen::VectorXd& w) {
  TimeSignal s{static_cast<std::size_t>(w.size()),
               [w](double, std::span<double> y) {
                 for (std::size_t i = 0; i < y.size(); ++i) y[i] = w[static_cast<Eigen::Index>(i)];
               },
               {}};
  Perturbation p = Perturbation::time_only(std::move(s));
  p.name = "constant";
  p.flags = {true, false};
  return p;
}

Perturbation make_perturbation(const std::string& name, std::size_t dim, const Params& params) {
  auto need_dim = [&](std::size_t want) {
    if (dim != want)
      throw std::invalid_argument("perturbation '" + name + "' has dimension " + std::to_string(want) +
                                  ", the system needs " + std::to_string(dim));
  };
  if (name == "zero") {
    allow_only(params, {}, name);
    return Perturbation::zero(dim);
  }
  if (name == "example1_unbounded") {
    allow_only(params, {}, name);
    need_dim(2);
    return example1_unbounded();
  }
  if (name == "example1_bounded") {
    allow_only(params, {}, name);
    need_dim(2);
    return example1_bounded();
  }
  if (name == "const_1_0") {
    allow_only(params, {}, name);
    need_dim(2);
    Perturbation p = constant_perturbation(Eigen::Vector2d(1.0, 0.0));
    p.name = name;
    return p;
  }
  if (const auto sig = find_signal(name)) {
    allow_only(params, {"channel", "scale"}, name);
    const double ch = param(params, "channel", 0.0);
    if (ch < 0 || ch != std::floor(ch)) throw std::invalid_argument(name + ": channel must be a nonnegative integer");
    TimeSignal s = scaled(sig->signal, param(params, "scale", 1.0));
    Perturbation p = Perturbation::time_only(embedded(std::move(s), dim, static_cast<std::size_t>(ch)));
    p.name = name;
    p.flags = {name != "t_cos_t4" && name != "vec_t_cos_sin_t4", name != "const1"};
    return p;
  }
  throw std::invalid_argument("unknown perturbation '" + name + "'");
}

const std::vector<CatalogEntry>& perturbation_catalog() {
  static const std::vector<CatalogEntry> c = [] {
    std::vector<CatalogEntry> out{
        {"zero", "W = 0"},
        {"example1_unbounded", "W(t) = (0.5 t sin t^4, -t cos t^4): unbounded, diminishing"},
        {"example1_bounded", "W(t,E) = (-e2 sin e^t, 2(e1^(1/3) + e2 + 1) cos e^t)"},
        {"const_1_0", "W = (1, 0): not diminishing"},
    };
    for (const auto& s : signal_catalog()) {
      const bool taken = std::any_of(out.begin(), out.end(), [&](const CatalogEntry& e) { return e.name == s.name; });
      if (!taken) out.push_back({s.name, s.description + " (params channel, scale)"});
    }
    return out;
  }();
  return c;
}

TrackingSpec make_tracking(const std::string& name, std::size_t m, std::size_t n) {
  const auto mi = static_cast<Eigen::Index>(m);
  const auto ni = static_cast<Eigen::Index>(n);
  TrackingSpec s;
  if (name == "zero") {
    s.x_d = [mi, ni](double) { return Eigen::MatrixXd::Zero(mi, ni).eval(); };
    s.y_d_n = [mi](double) { return Eigen::VectorXd::Zero(mi).eval(); };
    return s;
  }
  if (name == "sin") {
    s.x_d = [mi, ni](double t) {
      Eigen::MatrixXd x(mi, ni);
      for (Eigen::Index i = 0; i < ni; ++i) x.col(i).setConstant(std::sin(t + static_cast<double>(i) * std::numbers::pi / 2));
      return x;
    };
    s.y_d_n = [mi, ni](double t) {
      return Eigen::VectorXd::Constant(mi, std::sin(t + static_cast<double>(ni) * std::numbers::pi / 2)).eval();
    };
    return s;
  }
  throw std::invalid_argument("unknown tracking reference '" + name + "'");
}

const std::vector<CatalogEntry>& tracking_catalog() {
  static const std::vector<CatalogEntry> c{
      {"zero", "X_d = 0 (reduces to stabilization)"},
      {"sin", "Y_d = sin t on every channel"},
  };
  return c;
}

}  // namespace evuas
