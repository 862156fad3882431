#include <algorithm>
#include <cmath>

#include "evuas/simd/kernels.hpp"

namespace evuas::simd {

// QUADPACK qk15 constants, reflected into ascending order.
const double kGkAbscissae[kGkNodes] = {
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245,  0.405845151377397166906606412076961,
    0.586087235467691130294144845693013,  0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,  0.949107912342758524526189684047851,
    0.991455371120812639206854697526329};

const double kGkKronrodWeights[kGkNodes] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970};

const double kGkGaussWeights[kGkNodes] = {
    0.0, 0.129484966168869693270611432679082,
    0.0, 0.279705391489276667901467771423780,
    0.0, 0.381830050505118944950369775488975,
    0.0, 0.417959183673469387755102040816327,
    0.0, 0.381830050505118944950369775488975,
    0.0, 0.279705391489276667901467771423780,
    0.0, 0.129484966168869693270611432679082,
    0.0};

namespace scalar {

double sum_squares(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc;
}

double max_abs(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc = std::max(acc, std::abs(v));
  return acc;
}

void stage_combine(std::span<double> out, std::span<const double> y, double h,
                   std::span<const double> coeffs, std::span<const double* const> stages) {
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j) acc += coeffs[j] * stages[j][i];
    out[i] = y[i] + h * acc;
  }
}

double scaled_rms(std::span<const double> err, std::span<const double> y0,
                  std::span<const double> y1, double atol, double rtol) {
  if (err.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < err.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = err[i] / sc;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

void gk15_panels(std::span<const double> values, std::span<const double> half_width,
                 std::span<double> integral, std::span<double> error) {
  const std::size_t panels = half_width.size();
  for (std::size_t p = 0; p < panels; ++p) {
    double k = 0.0;
    double g = 0.0;
    for (std::size_t j = 0; j < kGkNodes; ++j) {
      const double v = values[j * panels + p];
      k += kGkKronrodWeights[j] * v;
      g += kGkGaussWeights[j] * v;
    }
    integral[p] = half_width[p] * k;
    error[p] = std::abs(half_width[p] * (k - g));
  }
}

void soa_euclidean_norms(std::span<const double> data, std::size_t components,
                         std::span<double> out) {
  const std::size_t count = out.size();
  for (std::size_t p = 0; p < count; ++p) {
    double acc = 0.0;
    for (std::size_t c = 0; c < components; ++c) {
      const double v = data[c * count + p];
      acc += v * v;
    }
    out[p] = std::sqrt(acc);
  }
}

void soa_inf_norms(std::span<const double> data, std::size_t components, std::span<double> out) {
  const std::size_t count = out.size();
  for (std::size_t p = 0; p < count; ++p) {
    double acc = 0.0;
    for (std::size_t c = 0; c < components; ++c) acc = std::max(acc, std::abs(data[c * count + p]));
    out[p] = acc;
  }
}

}  // namespace scalar
}  // namespace evuas::simd
