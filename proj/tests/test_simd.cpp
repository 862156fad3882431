#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "evuas/simd/kernels.hpp"

using namespace evuas;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

bool close(double a, double b, double rel = 1e-13) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

// Lengths that exercise the 4-wide body, the remainder and the empty case.
const std::size_t kLengths[] = {0, 1, 3, 4, 5, 7, 8, 13, 64, 1001};

}  // namespace

TEST_SUITE("simd") {

TEST_CASE("backend selection round-trips") {
  const simd::Backend original = simd::backend();
  CHECK(simd::available(simd::Backend::kScalar));
  simd::set_backend(simd::Backend::kScalar);
  CHECK(simd::backend() == simd::Backend::kScalar);
  if (simd::available(simd::Backend::kAvx2)) {
    simd::set_backend(simd::Backend::kAvx2);
    CHECK(simd::backend() == simd::Backend::kAvx2);
  } else {
    CHECK_THROWS_AS(simd::set_backend(simd::Backend::kAvx2), std::invalid_argument);
  }
  simd::set_backend(original);
  CHECK(simd::to_string(simd::Backend::kScalar) == "scalar");
}

TEST_CASE("gauss-kronrod table integrates polynomials exactly") {
  // K15 is exact to degree 22, G7 to degree 13.
  double k = 0.0, g = 0.0, wk = 0.0;
  for (std::size_t j = 0; j < simd::kGkNodes; ++j) {
    const double x = simd::kGkAbscissae[j];
    k += simd::kGkKronrodWeights[j] * std::pow(x, 22);
    g += simd::kGkGaussWeights[j] * std::pow(x, 12);
    wk += simd::kGkKronrodWeights[j];
  }
  CHECK(wk == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(k == doctest::Approx(2.0 / 23.0).epsilon(1e-14));
  CHECK(g == doctest::Approx(2.0 / 13.0).epsilon(1e-14));
}

#if defined(__x86_64__) || defined(_M_X64)

TEST_CASE("avx2 kernels agree with the scalar reference") {
  if (!simd::available(simd::Backend::kAvx2)) {
    MESSAGE("AVX2 not available on this CPU; equivalence skipped");
    return;
  }
  for (const std::size_t n : kLengths) {
    CAPTURE(n);
    const auto x = random_vector(n, 100 + n, 3.0);
    CHECK(close(simd::scalar::sum_squares(x), simd::avx2::sum_squares(x)));
    CHECK(simd::scalar::max_abs(x) == simd::avx2::max_abs(x));

    const auto y0 = random_vector(n, 200 + n);
    const auto y1 = random_vector(n, 300 + n);
    const auto err = random_vector(n, 400 + n, 1e-6);
    if (n > 0) CHECK(close(simd::scalar::scaled_rms(err, y0, y1, 1e-8, 1e-6),
                           simd::avx2::scaled_rms(err, y0, y1, 1e-8, 1e-6)));

    std::vector<std::vector<double>> stage_store;
    std::vector<const double*> stages;
    for (int s = 0; s < 7; ++s) stage_store.push_back(random_vector(n, 500 + 7 * n + s));
    for (const auto& s : stage_store) stages.push_back(s.data());
    const std::vector<double> coeffs{35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0.0};
    std::vector<double> a(n), b(n);
    simd::scalar::stage_combine(a, y0, 0.125, coeffs, stages);
    simd::avx2::stage_combine(b, y0, 0.125, coeffs, stages);
    for (std::size_t i = 0; i < n; ++i) CHECK(close(a[i], b[i]));
  }
}

TEST_CASE("avx2 panel and norm kernels agree with the scalar reference") {
  if (!simd::available(simd::Backend::kAvx2)) return;
  for (const std::size_t panels : kLengths) {
    CAPTURE(panels);
    const auto values = random_vector(simd::kGkNodes * panels, 600 + panels);
    const auto hw = random_vector(panels, 700 + panels, 0.1);
    std::vector<double> i1(panels), e1(panels), i2(panels), e2(panels);
    simd::scalar::gk15_panels(values, hw, i1, e1);
    simd::avx2::gk15_panels(values, hw, i2, e2);
    for (std::size_t p = 0; p < panels; ++p) {
      CHECK(close(i1[p], i2[p]));
      CHECK(close(e1[p], e2[p], 1e-10));
    }
    for (const std::size_t comps : {1u, 2u, 5u}) {
      const auto data = random_vector(comps * panels, 800 + panels + comps);
      std::vector<double> n1(panels), n2(panels);
      simd::scalar::soa_euclidean_norms(data, comps, n1);
      simd::avx2::soa_euclidean_norms(data, comps, n2);
      for (std::size_t p = 0; p < panels; ++p) CHECK(close(n1[p], n2[p]));
      simd::scalar::soa_inf_norms(data, comps, n1);
      simd::avx2::soa_inf_norms(data, comps, n2);
      for (std::size_t p = 0; p < panels; ++p) CHECK(n1[p] == n2[p]);
    }
  }
}

#endif

TEST_CASE("scalar kernels match direct loops") {
  const auto x = random_vector(37, 9);
  double ss = 0.0, ma = 0.0;
  for (double v : x) {
    ss += v * v;
    ma = std::max(ma, std::abs(v));
  }
  CHECK(close(simd::scalar::sum_squares(x), ss));
  CHECK(simd::scalar::max_abs(x) == ma);

  // Two 3-vectors stored component-major.
  const std::vector<double> data{3.0, 1.0, 4.0, -2.0, 0.0, 2.0};
  std::vector<double> out(2);
  simd::scalar::soa_euclidean_norms(data, 3, out);
  CHECK(out[0] == doctest::Approx(5.0));
  CHECK(out[1] == doctest::Approx(3.0));
  simd::scalar::soa_inf_norms(data, 3, out);
  CHECK(out[0] == 4.0);
  CHECK(out[1] == 2.0);
}

TEST_CASE("dispatching wrappers follow the active backend") {
  const simd::Backend original = simd::backend();
  const auto x = random_vector(101, 31);
  simd::set_backend(simd::Backend::kScalar);
  const double s = simd::sum_squares(x);
  CHECK(s == simd::scalar::sum_squares(x));
  if (simd::available(simd::Backend::kAvx2)) {
    simd::set_backend(simd::Backend::kAvx2);
    CHECK(close(simd::sum_squares(x), s));
  }
  simd::set_backend(original);
}

}  // TEST_SUITE
