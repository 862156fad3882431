#include "evuas/norms.hpp"

#include <cmath>
#include <stdexcept>

#include "evuas/simd/kernels.hpp"

namespace evuas {

std::string_view to_string(Norm norm) {
  return norm == Norm::kInf ? "inf" : "euclidean";
}

Norm parse_norm(std::string_view name) {
  if (name == "euclidean" || name == "2") return Norm::kEuclidean;
  if (name == "inf" || name == "max") return Norm::kInf;
  throw std::invalid_argument("unknown norm '" + std::string(name) + "'");
}

double vector_norm(std::span<const double> x, Norm norm) {
  if (norm == Norm::kInf) return simd::max_abs(x);
  return std::sqrt(simd::sum_squares(x));
}

NormEquivalence norm_equivalence(Norm norm, std::size_t dim) {
  if (norm == Norm::kInf) return {1.0, std::sqrt(static_cast<double>(dim))};
  return {1.0, 1.0};
}

}  // namespace evuas
