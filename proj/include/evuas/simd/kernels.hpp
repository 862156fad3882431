#pragma once

// Data-parallel inner loops shared by the quadrature, the Runge-Kutta
// integrator and the trajectory post-processing. Each kernel has a scalar
// reference implementation and, on x86-64, an AVX2/FMA variant. The variant
// is picked once at runtime from CPUID (override with EVUAS_SIMD=scalar|avx2
// or set_backend()).
//
// Layouts are structure-of-arrays: a "component-major" block of `count`
// d-vectors stores component c of vector p at data[c * count + p].

#include <cstddef>
#include <span>
#include <string_view>

namespace evuas::simd {

enum class Backend { kScalar, kAvx2 };

std::string_view to_string(Backend backend);
bool available(Backend backend);
Backend backend();
// Throws std::invalid_argument when the backend is not available on this CPU.
void set_backend(Backend backend);

// Gauss-Kronrod 7-15 nodes on [-1, 1] in ascending order and their weights.
// Gauss weights are zero on the pure Kronrod nodes.
inline constexpr std::size_t kGkNodes = 15;
extern const double kGkAbscissae[kGkNodes];
extern const double kGkKronrodWeights[kGkNodes];
extern const double kGkGaussWeights[kGkNodes];

double sum_squares(std::span<const double> x);
double max_abs(std::span<const double> x);

// out[i] = y[i] + h * sum_j coeffs[j] * stages[j][i]
void stage_combine(std::span<double> out, std::span<const double> y, double h,
                   std::span<const double> coeffs, std::span<const double* const> stages);

// sqrt(mean_i (err[i] / (atol + rtol * max(|y0[i]|, |y1[i]|)))^2)
double scaled_rms(std::span<const double> err, std::span<const double> y0,
                  std::span<const double> y1, double atol, double rtol);

// Node-major values: values[j * panels + p] = f(node j of panel p).
// integral[p] = half_width[p] * sum_j wK_j v, error[p] = |that - Gauss estimate|.
void gk15_panels(std::span<const double> values, std::span<const double> half_width,
                 std::span<double> integral, std::span<double> error);

// Euclidean norms of `out.size()` vectors stored component-major with
// `components` rows.
void soa_euclidean_norms(std::span<const double> data, std::size_t components,
                         std::span<double> out);
void soa_inf_norms(std::span<const double> data, std::size_t components, std::span<double> out);

namespace scalar {
double sum_squares(std::span<const double> x);
double max_abs(std::span<const double> x);
void stage_combine(std::span<double> out, std::span<const double> y, double h,
                   std::span<const double> coeffs, std::span<const double* const> stages);
double scaled_rms(std::span<const double> err, std::span<const double> y0,
                  std::span<const double> y1, double atol, double rtol);
void gk15_panels(std::span<const double> values, std::span<const double> half_width,
                 std::span<double> integral, std::span<double> error);
void soa_euclidean_norms(std::span<const double> data, std::size_t components,
                         std::span<double> out);
void soa_inf_norms(std::span<const double> data, std::size_t components, std::span<double> out);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double sum_squares(std::span<const double> x);
double max_abs(std::span<const double> x);
void stage_combine(std::span<double> out, std::span<const double> y, double h,
                   std::span<const double> coeffs, std::span<const double* const> stages);
double scaled_rms(std::span<const double> err, std::span<const double> y0,
                  std::span<const double> y1, double atol, double rtol);
void gk15_panels(std::span<const double> values, std::span<const double> half_width,
                 std::span<double> integral, std::span<double> error);
void soa_euclidean_norms(std::span<const double> data, std::size_t components,
                         std::span<double> out);
void soa_inf_norms(std::span<const double> data, std::size_t components, std::span<double> out);
}  // namespace avx2
#endif

}  // namespace evuas::simd
