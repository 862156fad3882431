#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

namespace evuas {

class SystemModel;

// Desired trajectory X_d(t) = [Y_d, ..., Y_d^(n-1)] (m x n) and Y_d^(n)(t).
struct TrackingSpec {
  std::function<Eigen::MatrixXd(double t)> x_d;
  std::function<Eigen::VectorXd(double t)> y_d_n;

  // Column i+1 against a central difference of column i at `samples` seeded
  // times in [t0, t1]; relative tolerance 1e-4. Returns the worst relative error.
  double consistency_error(double t0, double t1, std::uint64_t seed = 11, int samples = 10) const;
  // max ||F(X_d(t), 0)|| over a uniform grid of `samples` points on [t0, t1].
  double admissibility_error(const SystemModel& model, double t0, double t1, int samples = 201) const;
};

}  // namespace evuas
