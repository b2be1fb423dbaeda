// Compiled with -mavx2 -mfma on x86-64 only. Nothing here may run before
// simd_table() has confirmed CPU support.

#include "rldx/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <bit>
#include <cmath>
#include <limits>

namespace rldx::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
    a1 = _mm256_add_pd(a1, _mm256_loadu_pd(x + i + 4));
  }
  for (; i + 4 <= n; i += 4) a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
  double s = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) s += x[i];
  return s;
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
  }
  for (; i + 4 <= n; i += 4)
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
  double s = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

double sum_sq_diff_avx2(const double* x, const double* y, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    a0 = _mm256_fmadd_pd(d, d, a0);
  }
  double s = hsum(a0);
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

double sum_sq_dev_avx2(const double* x, std::size_t n, double mean) {
  const __m256d vm = _mm256_set1_pd(mean);
  __m256d a0 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), vm);
    a0 = _mm256_fmadd_pd(d, d, a0);
  }
  double s = hsum(a0);
  for (; i < n; ++i) {
    const double d = x[i] - mean;
    s += d * d;
  }
  return s;
}

CrossSums centered_cross_avx2(const double* x, const double* y, std::size_t n, double mx,
                              double my) {
  const __m256d vmx = _mm256_set1_pd(mx);
  const __m256d vmy = _mm256_set1_pd(my);
  __m256d axx = _mm256_setzero_pd();
  __m256d axy = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(x + i), vmx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(y + i), vmy);
    axx = _mm256_fmadd_pd(dx, dx, axx);
    axy = _mm256_fmadd_pd(dx, dy, axy);
  }
  CrossSums c{hsum(axx), hsum(axy)};
  for (; i < n; ++i) {
    const double dx = x[i] - mx;
    c.sxx += dx * dx;
    c.sxy += dx * (y[i] - my);
  }
  return c;
}

double residual_sq_avx2(const double* x, const double* y, std::size_t n, double slope,
                        double intercept) {
  const __m256d vs = _mm256_set1_pd(slope);
  const __m256d vb = _mm256_set1_pd(intercept);
  __m256d a0 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d fit = _mm256_fmadd_pd(vs, _mm256_loadu_pd(x + i), vb);
    const __m256d r = _mm256_sub_pd(_mm256_loadu_pd(y + i), fit);
    a0 = _mm256_fmadd_pd(r, r, a0);
  }
  double s = hsum(a0);
  for (; i < n; ++i) {
    const double r = y[i] - (intercept + slope * x[i]);
    s += r * r;
  }
  return s;
}

Moments moments_avx2(const double* x, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d pinf = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  const __m256d ninf = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  __m256d vsum = zero;
  __m256d vsq = zero;
  __m256d vmin = pinf;
  __m256d vmax = ninf;
  std::size_t n_finite = 0;
  std::size_t n_zero = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    // v - v is 0 for finite lanes and NaN otherwise.
    const __m256d finite = _mm256_cmp_pd(_mm256_sub_pd(v, v), zero, _CMP_EQ_OQ);
    const __m256d is_zero = _mm256_cmp_pd(v, zero, _CMP_EQ_OQ);
    const __m256d fv = _mm256_and_pd(v, finite);
    vsum = _mm256_add_pd(vsum, fv);
    vsq = _mm256_fmadd_pd(fv, fv, vsq);
    vmin = _mm256_min_pd(vmin, _mm256_blendv_pd(pinf, v, finite));
    vmax = _mm256_max_pd(vmax, _mm256_blendv_pd(ninf, v, finite));
    n_finite += static_cast<std::size_t>(std::popcount(
        static_cast<unsigned>(_mm256_movemask_pd(finite))));
    n_zero += static_cast<std::size_t>(std::popcount(
        static_cast<unsigned>(_mm256_movemask_pd(is_zero))));
  }
  Moments m;
  m.sum = hsum(vsum);
  m.sum_sq = hsum(vsq);
  alignas(32) double lo[4];
  alignas(32) double hi[4];
  _mm256_store_pd(lo, vmin);
  _mm256_store_pd(hi, vmax);
  double mn = lo[0];
  double mx = hi[0];
  for (int k = 1; k < 4; ++k) {
    if (lo[k] < mn) mn = lo[k];
    if (hi[k] > mx) mx = hi[k];
  }
  for (; i < n; ++i) {
    const double v = x[i];
    if (!std::isfinite(v)) continue;
    if (v == 0.0) ++n_zero;
    m.sum += v;
    m.sum_sq += v * v;
    if (v < mn) mn = v;
    if (v > mx) mx = v;
    ++n_finite;
  }
  m.n_finite = n_finite;
  m.n_zero = n_zero;
  m.n_nonfinite = n - n_finite;
  if (n_finite > 0) {
    m.min = mn;
    m.max = mx;
  }
  return m;
}

constexpr KernelTable kAvx2{
    "avx2",          sum_avx2,         dot_avx2,
    axpy_avx2,       sum_sq_diff_avx2, sum_sq_dev_avx2,
    centered_cross_avx2, residual_sq_avx2, moments_avx2,
};

}  // namespace

namespace detail {
const KernelTable* avx2_table_if_compiled() {
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &kAvx2;
  return nullptr;
}
}  // namespace detail

}  // namespace rldx::kernels

#else

namespace rldx::kernels::detail {
const KernelTable* avx2_table_if_compiled() { return nullptr; }
}  // namespace rldx::kernels::detail

#endif
