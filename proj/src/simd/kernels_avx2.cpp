#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "evuas/simd/kernels.hpp"

namespace evuas::simd::avx2 {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmax(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(m, _mm_unpackhi_pd(m, m)));
}

inline __m256d abs_pd(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

}  // namespace

double sum_squares(std::span<const double> x) {
  const std::size_t n = x.size();
  const double* p = x.data();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d a = _mm256_loadu_pd(p + i);
    const __m256d b = _mm256_loadu_pd(p + i + 4);
    acc0 = _mm256_fmadd_pd(a, a, acc0);
    acc1 = _mm256_fmadd_pd(b, b, acc1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(p + i);
    acc0 = _mm256_fmadd_pd(a, a, acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += p[i] * p[i];
  return acc;
}

double max_abs(std::span<const double> x) {
  const std::size_t n = x.size();
  const double* p = x.data();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, abs_pd(_mm256_loadu_pd(p + i)));
  double m = hmax(acc);
  for (; i < n; ++i) m = std::max(m, std::abs(p[i]));
  return m;
}

void stage_combine(std::span<double> out, std::span<const double> y, double h,
                   std::span<const double> coeffs, std::span<const double* const> stages) {
  const std::size_t n = out.size();
  const std::size_t k = coeffs.size();
  const __m256d hv = _mm256_set1_pd(h);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < k; ++j)
      acc = _mm256_fmadd_pd(_mm256_set1_pd(coeffs[j]), _mm256_loadu_pd(stages[j] + i), acc);
    _mm256_storeu_pd(out.data() + i, _mm256_fmadd_pd(hv, acc, _mm256_loadu_pd(y.data() + i)));
  }
  for (; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) acc = std::fma(coeffs[j], stages[j][i], acc);
    out[i] = std::fma(h, acc, y[i]);
  }
}

double scaled_rms(std::span<const double> err, std::span<const double> y0,
                  std::span<const double> y1, double atol, double rtol) {
  const std::size_t n = err.size();
  if (n == 0) return 0.0;
  const __m256d av = _mm256_set1_pd(atol);
  const __m256d rv = _mm256_set1_pd(rtol);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = abs_pd(_mm256_loadu_pd(y0.data() + i));
    const __m256d b = abs_pd(_mm256_loadu_pd(y1.data() + i));
    const __m256d sc = _mm256_fmadd_pd(rv, _mm256_max_pd(a, b), av);
    const __m256d r = _mm256_div_pd(_mm256_loadu_pd(err.data() + i), sc);
    acc = _mm256_fmadd_pd(r, r, acc);
  }
  double total = hsum(acc);
  for (; i < n; ++i) {
    const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = err[i] / sc;
    total += r * r;
  }
  return std::sqrt(total / static_cast<double>(n));
}

void gk15_panels(std::span<const double> values, std::span<const double> half_width,
                 std::span<double> integral, std::span<double> error) {
  const std::size_t panels = half_width.size();
  std::size_t p = 0;
  for (; p + 4 <= panels; p += 4) {
    __m256d k = _mm256_setzero_pd();
    __m256d g = _mm256_setzero_pd();
    for (std::size_t j = 0; j < kGkNodes; ++j) {
      const __m256d v = _mm256_loadu_pd(values.data() + j * panels + p);
      k = _mm256_fmadd_pd(_mm256_set1_pd(kGkKronrodWeights[j]), v, k);
      g = _mm256_fmadd_pd(_mm256_set1_pd(kGkGaussWeights[j]), v, g);
    }
    const __m256d hw = _mm256_loadu_pd(half_width.data() + p);
    _mm256_storeu_pd(integral.data() + p, _mm256_mul_pd(hw, k));
    _mm256_storeu_pd(error.data() + p, abs_pd(_mm256_mul_pd(hw, _mm256_sub_pd(k, g))));
  }
  for (; p < panels; ++p) {
    double k = 0.0;
    double g = 0.0;
    for (std::size_t j = 0; j < kGkNodes; ++j) {
      const double v = values[j * panels + p];
      k = std::fma(kGkKronrodWeights[j], v, k);
      g = std::fma(kGkGaussWeights[j], v, g);
    }
    integral[p] = half_width[p] * k;
    error[p] = std::abs(half_width[p] * (k - g));
  }
}

void soa_euclidean_norms(std::span<const double> data, std::size_t components,
                         std::span<double> out) {
  const std::size_t count = out.size();
  std::size_t p = 0;
  for (; p + 4 <= count; p += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t c = 0; c < components; ++c) {
      const __m256d v = _mm256_loadu_pd(data.data() + c * count + p);
      acc = _mm256_fmadd_pd(v, v, acc);
    }
    _mm256_storeu_pd(out.data() + p, _mm256_sqrt_pd(acc));
  }
  for (; p < count; ++p) {
    double acc = 0.0;
    for (std::size_t c = 0; c < components; ++c) {
      const double v = data[c * count + p];
      acc = std::fma(v, v, acc);
    }
    out[p] = std::sqrt(acc);
  }
}

void soa_inf_norms(std::span<const double> data, std::size_t components, std::span<double> out) {
  const std::size_t count = out.size();
  std::size_t p = 0;
  for (; p + 4 <= count; p += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t c = 0; c < components; ++c)
      acc = _mm256_max_pd(acc, abs_pd(_mm256_loadu_pd(data.data() + c * count + p)));
    _mm256_storeu_pd(out.data() + p, acc);
  }
  for (; p < count; ++p) {
    double acc = 0.0;
    for (std::size_t c = 0; c < components; ++c) acc = std::max(acc, std::abs(data[c * count + p]));
    out[p] = acc;
  }
}

}  // namespace evuas::simd::avx2

#endif
