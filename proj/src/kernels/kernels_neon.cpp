// AArch64 variant. Advanced SIMD is mandatory on AArch64, so no runtime probe.

#include "rldx/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

#include <cmath>

namespace rldx::kernels {
namespace {

double sum_neon(const double* x, std::size_t n) {
  float64x2_t a0 = vdupq_n_f64(0.0);
  float64x2_t a1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 = vaddq_f64(a0, vld1q_f64(x + i));
    a1 = vaddq_f64(a1, vld1q_f64(x + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(a0, a1));
  for (; i < n; ++i) s += x[i];
  return s;
}

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t a0 = vdupq_n_f64(0.0);
  float64x2_t a1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 = vfmaq_f64(a0, vld1q_f64(x + i), vld1q_f64(y + i));
    a1 = vfmaq_f64(a1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(a0, a1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

double sum_sq_diff_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t a0 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(x + i), vld1q_f64(y + i));
    a0 = vfmaq_f64(a0, d, d);
  }
  double s = vaddvq_f64(a0);
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

double sum_sq_dev_neon(const double* x, std::size_t n, double mean) {
  const float64x2_t vm = vdupq_n_f64(mean);
  float64x2_t a0 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(x + i), vm);
    a0 = vfmaq_f64(a0, d, d);
  }
  double s = vaddvq_f64(a0);
  for (; i < n; ++i) {
    const double d = x[i] - mean;
    s += d * d;
  }
  return s;
}

CrossSums centered_cross_neon(const double* x, const double* y, std::size_t n, double mx,
                              double my) {
  const float64x2_t vmx = vdupq_n_f64(mx);
  const float64x2_t vmy = vdupq_n_f64(my);
  float64x2_t axx = vdupq_n_f64(0.0);
  float64x2_t axy = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t dx = vsubq_f64(vld1q_f64(x + i), vmx);
    const float64x2_t dy = vsubq_f64(vld1q_f64(y + i), vmy);
    axx = vfmaq_f64(axx, dx, dx);
    axy = vfmaq_f64(axy, dx, dy);
  }
  CrossSums c{vaddvq_f64(axx), vaddvq_f64(axy)};
  for (; i < n; ++i) {
    const double dx = x[i] - mx;
    c.sxx += dx * dx;
    c.sxy += dx * (y[i] - my);
  }
  return c;
}

double residual_sq_neon(const double* x, const double* y, std::size_t n, double slope,
                        double intercept) {
  const float64x2_t vs = vdupq_n_f64(slope);
  const float64x2_t vb = vdupq_n_f64(intercept);
  float64x2_t a0 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t r = vsubq_f64(vld1q_f64(y + i), vfmaq_f64(vb, vs, vld1q_f64(x + i)));
    a0 = vfmaq_f64(a0, r, r);
  }
  double s = vaddvq_f64(a0);
  for (; i < n; ++i) {
    const double r = y[i] - (intercept + slope * x[i]);
    s += r * r;
  }
  return s;
}

constexpr KernelTable kNeon{
    "neon",
    sum_neon,
    dot_neon,
    axpy_neon,
    sum_sq_diff_neon,
    sum_sq_dev_neon,
    centered_cross_neon,
    residual_sq_neon,
    // Moments carry data-dependent branching on non-finite lanes; the
    // reference loop is used.
    nullptr,
};

}  // namespace

namespace detail {
const KernelTable* neon_table_if_compiled() {
  static const KernelTable table = [] {
    KernelTable t = kNeon;
    t.moments = scalar_table().moments;
    return t;
  }();
  return &table;
}
}  // namespace detail

}  // namespace rldx::kernels

#else

namespace rldx::kernels::detail {
const KernelTable* neon_table_if_compiled() { return nullptr; }
}  // namespace rldx::kernels::detail

#endif
