#include "rldx/kernels.hpp"

#include <cmath>

namespace rldx::kernels {
namespace {

double sum_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double sum_sq_diff_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

double sum_sq_dev_scalar(const double* x, std::size_t n, double mean) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - mean;
    s += d * d;
  }
  return s;
}

CrossSums centered_cross_scalar(const double* x, const double* y, std::size_t n, double mx,
                                double my) {
  CrossSums c;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    c.sxx += dx * dx;
    c.sxy += dx * (y[i] - my);
  }
  return c;
}

double residual_sq_scalar(const double* x, const double* y, std::size_t n, double slope,
                          double intercept) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (intercept + slope * x[i]);
    s += r * r;
  }
  return s;
}

Moments moments_scalar(const double* x, std::size_t n) {
  Moments m;
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = x[i];
    if (!std::isfinite(v)) {
      ++m.n_nonfinite;
      continue;
    }
    if (v == 0.0) ++m.n_zero;
    m.sum += v;
    m.sum_sq += v * v;
    if (!any) {
      m.min = m.max = v;
      any = true;
    } else {
      if (v < m.min) m.min = v;
      if (v > m.max) m.max = v;
    }
    ++m.n_finite;
  }
  return m;
}

constexpr KernelTable kScalar{
    "scalar",          sum_scalar,         dot_scalar,
    axpy_scalar,       sum_sq_diff_scalar, sum_sq_dev_scalar,
    centered_cross_scalar, residual_sq_scalar, moments_scalar,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace rldx::kernels
