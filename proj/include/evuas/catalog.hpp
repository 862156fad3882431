#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "evuas/perturbation.hpp"
#include "evuas/system_model.hpp"
#include "evuas/tracking.hpp"

namespace evuas {

using Params = std::map<std::string, double>;

struct CatalogEntry {
  std::string name;
  std::string description;
};

// F_j = b * U_j + c * Y_j. Affine in U; with c = 0 the closed form of the
// synthesized feedback is a linear solve.
SystemModel chain_model(std::size_t m, std::size_t n, double input_gain = 1.0, double coupling = 0.0);
// F_j = U_j + U_j^3.
SystemModel cubic_model(std::size_t m, std::size_t n);
// F_j = tanh(U_j): J_{F,U}(0,0) = I but Phi_X is bounded.
SystemModel tanh_model(std::size_t m, std::size_t n);

// Throws std::invalid_argument on unknown names or parameters.
SystemModel make_model(const std::string& name, std::size_t m, std::size_t n, const Params& params = {});
const std::vector<CatalogEntry>& model_catalog();

// W(t) = (0.5 t sin t^4, -t cos t^4).
Perturbation example1_unbounded();
// W(t, E) = (-e2 sin e^t, 2 (cbrt(e1) + e2 + 1) cos e^t), real cube root.
Perturbation example1_bounded();
Perturbation constant_perturbation(const Eigen::VectorXd& w);

// Names: "zero", "example1_unbounded", "example1_bounded", "const_1_0", or
// any signal catalog name placed on channel `channel` (default 0) scaled by
// `scale` (default 1).
Perturbation make_perturbation(const std::string& name, std::size_t dim, const Params& params = {});
const std::vector<CatalogEntry>& perturbation_catalog();

// "zero": X_d = 0. "sin": every channel follows sin t, column i = sin(t + i pi/2).
TrackingSpec make_tracking(const std::string& name, std::size_t m, std::size_t n);
const std::vector<CatalogEntry>& tracking_catalog();

}  // namespace evuas
