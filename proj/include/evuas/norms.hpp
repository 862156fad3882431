#pragma once

#include <span>
#include <string>
#include <string_view>

namespace evuas {

enum class Norm { kEuclidean, kInf };

std::string_view to_string(Norm norm);
Norm parse_norm(std::string_view name);

double vector_norm(std::span<const double> x, Norm norm);

// Constants with theta1*|x| <= ||x||_2 <= theta2*|x| on R^dim.
struct NormEquivalence {
  double theta1;
  double theta2;
};
NormEquivalence norm_equivalence(Norm norm, std::size_t dim);

}  // namespace evuas
