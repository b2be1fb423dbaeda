#pragma once

// Data-parallel inner loops. Each kernel has a scalar reference implementation
// and, where the CPU supports it, an AVX2+FMA (x86-64) or NEON (AArch64)
// variant. The active table is picked once at first use; setting the
// environment variable RLDX_SIMD=scalar forces the reference path.

#include <cstddef>
#include <span>

namespace rldx::kernels {

struct Moments {
  double sum = 0.0;     // over finite values
  double sum_sq = 0.0;  // over finite values
  double min = 0.0;     // over finite values; 0 when none
  double max = 0.0;
  std::size_t n_finite = 0;
  std::size_t n_zero = 0;
  std::size_t n_nonfinite = 0;
};

struct CrossSums {
  double sxx = 0.0;
  double sxy = 0.0;
};

struct KernelTable {
  const char* name;
  double (*sum)(const double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // sum (x_i - y_i)^2
  double (*sum_sq_diff)(const double* x, const double* y, std::size_t n);
  // sum (x_i - mean)^2
  double (*sum_sq_dev)(const double* x, std::size_t n, double mean);
  // sum (x_i - mx)^2, sum (x_i - mx)(y_i - my)
  CrossSums (*centered_cross)(const double* x, const double* y, std::size_t n, double mx,
                              double my);
  // sum (y_i - (intercept + slope * x_i))^2
  double (*residual_sq)(const double* x, const double* y, std::size_t n, double slope,
                        double intercept);
  Moments (*moments)(const double* x, std::size_t n);
};

const KernelTable& scalar_table();
/// nullptr when not compiled in or not supported by this CPU.
const KernelTable* simd_table();
/// The table every public wrapper below dispatches to.
const KernelTable& active_table();

double sum(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
void axpy(double a, std::span<const double> x, std::span<double> y);
double sum_sq_diff(std::span<const double> x, std::span<const double> y);
double sum_sq_dev(std::span<const double> x, double mean);
CrossSums centered_cross(std::span<const double> x, std::span<const double> y, double mx,
                         double my);
double residual_sq(std::span<const double> x, std::span<const double> y, double slope,
                   double intercept);
Moments moments(std::span<const double> x);

namespace detail {
// Per-ISA tables, defined in their own translation units.
const KernelTable* avx2_table_if_compiled();
const KernelTable* neon_table_if_compiled();
}  // namespace detail

}  // namespace rldx::kernels
