#include "evuas/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "evuas/system_model.hpp"

namespace evuas {

double TrackingSpec::consistency_error(double t0, double t1, std::uint64_t seed, int samples) const {
  if (!x_d || !y_d_n) throw std::invalid_argument("tracking spec is incomplete");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pick(t0, t1);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double t = pick(rng);
    const double h = 1e-5 * std::max(1.0, std::abs(t));
    const Eigen::MatrixXd lo = x_d(t - h);
    const Eigen::MatrixXd hi = x_d(t + h);
    const Eigen::MatrixXd mid = x_d(t);
    const Eigen::Index n = mid.cols();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd fd = (hi.col(i) - lo.col(i)) / (2.0 * h);
      const Eigen::VectorXd want = i + 1 < n ? Eigen::VectorXd(mid.col(i + 1)) : y_d_n(t);
      worst = std::max(worst, (fd - want).norm() / std::max(1.0, want.norm()));
    }
  }
  return worst;
}

double TrackingSpec::admissibility_error(const SystemModel& model, double t0, double t1, int samples) const {
  if (!x_d) throw std::invalid_argument("tracking spec is incomplete");
  const Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.m()));
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double t = samples > 1 ? t0 + (t1 - t0) * k / (samples - 1) : t0;
    const Eigen::MatrixXd xd = x_d(t);
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(xd.data(), xd.size());
    worst = std::max(worst, model.eval(x, u).norm());
  }
  return worst;
}

}  // namespace evuas
