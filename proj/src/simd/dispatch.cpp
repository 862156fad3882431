#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "evuas/simd/kernels.hpp"

namespace evuas::simd {
namespace {

struct KernelTable {
  double (*sum_squares)(std::span<const double>);
  double (*max_abs)(std::span<const double>);
  void (*stage_combine)(std::span<double>, std::span<const double>, double,
                        std::span<const double>, std::span<const double* const>);
  double (*scaled_rms)(std::span<const double>, std::span<const double>,
                       std::span<const double>, double, double);
  void (*gk15_panels)(std::span<const double>, std::span<const double>, std::span<double>,
                      std::span<double>);
  void (*soa_euclidean_norms)(std::span<const double>, std::size_t, std::span<double>);
  void (*soa_inf_norms)(std::span<const double>, std::size_t, std::span<double>);
};

constexpr KernelTable kScalarTable{
    scalar::sum_squares, scalar::max_abs,     scalar::stage_combine,       scalar::scaled_rms,
    scalar::gk15_panels, scalar::soa_euclidean_norms, scalar::soa_inf_norms};

#if defined(EVUAS_HAVE_AVX2_TU)
constexpr KernelTable kAvx2Table{
    avx2::sum_squares, avx2::max_abs,     avx2::stage_combine,       avx2::scaled_rms,
    avx2::gk15_panels, avx2::soa_euclidean_norms, avx2::soa_inf_norms};
#endif

bool cpu_has_avx2() {
#if defined(EVUAS_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* table_for(Backend b) {
#if defined(EVUAS_HAVE_AVX2_TU)
  if (b == Backend::kAvx2) return &kAvx2Table;
#endif
  (void)b;
  return &kScalarTable;
}

Backend initial_backend() {
  const char* env = std::getenv("EVUAS_SIMD");
  const std::string choice = env ? env : "auto";
  if (choice == "scalar") return Backend::kScalar;
  if (choice == "avx2" && !cpu_has_avx2())
    throw std::runtime_error("EVUAS_SIMD=avx2 requested but the CPU lacks AVX2/FMA");
  return cpu_has_avx2() ? Backend::kAvx2 : Backend::kScalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> b{initial_backend()};
  return b;
}

const KernelTable& active() { return *table_for(current().load(std::memory_order_relaxed)); }

}  // namespace

std::string_view to_string(Backend backend) {
  return backend == Backend::kAvx2 ? "avx2" : "scalar";
}

bool available(Backend backend) {
  return backend == Backend::kScalar || cpu_has_avx2();
}

Backend backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (!available(b)) throw std::invalid_argument("SIMD backend not available on this CPU");
  current().store(b, std::memory_order_relaxed);
}

double sum_squares(std::span<const double> x) { return active().sum_squares(x); }
double max_abs(std::span<const double> x) { return active().max_abs(x); }

void stage_combine(std::span<double> out, std::span<const double> y, double h,
                   std::span<const double> coeffs, std::span<const double* const> stages) {
  active().stage_combine(out, y, h, coeffs, stages);
}

double scaled_rms(std::span<const double> err, std::span<const double> y0,
                  std::span<const double> y1, double atol, double rtol) {
  return active().scaled_rms(err, y0, y1, atol, rtol);
}

void gk15_panels(std::span<const double> values, std::span<const double> half_width,
                 std::span<double> integral, std::span<double> error) {
  active().gk15_panels(values, half_width, integral, error);
}

void soa_euclidean_norms(std::span<const double> data, std::size_t components,
                         std::span<double> out) {
  active().soa_euclidean_norms(data, components, out);
}

void soa_inf_norms(std::span<const double> data, std::size_t components, std::span<double> out) {
  active().soa_inf_norms(data, components, out);
}

}  // namespace evuas::simd
