#include <cstdlib>
#include <stdexcept>
#include <string_view>

#include "rldx/kernels.hpp"

namespace rldx::kernels {

const KernelTable* simd_table() {
  static const KernelTable* table = [] {
    if (const KernelTable* t = detail::avx2_table_if_compiled()) return t;
    return detail::neon_table_if_compiled();
  }();
  return table;
}

const KernelTable& active_table() {
  static const KernelTable& table = []() -> const KernelTable& {
    if (const char* env = std::getenv("RLDX_SIMD"); env && std::string_view(env) == "scalar") {
      return scalar_table();
    }
    if (const KernelTable* t = simd_table()) return *t;
    return scalar_table();
  }();
  return table;
}

namespace {
void require_same(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("kernel operands differ in length");
}
}  // namespace

double sum(std::span<const double> x) { return active_table().sum(x.data(), x.size()); }

double dot(std::span<const double> x, std::span<const double> y) {
  require_same(x.size(), y.size());
  return active_table().dot(x.data(), y.data(), x.size());
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  require_same(x.size(), y.size());
  active_table().axpy(a, x.data(), y.data(), x.size());
}

double sum_sq_diff(std::span<const double> x, std::span<const double> y) {
  require_same(x.size(), y.size());
  return active_table().sum_sq_diff(x.data(), y.data(), x.size());
}

double sum_sq_dev(std::span<const double> x, double mean) {
  return active_table().sum_sq_dev(x.data(), x.size(), mean);
}

CrossSums centered_cross(std::span<const double> x, std::span<const double> y, double mx,
                         double my) {
  require_same(x.size(), y.size());
  return active_table().centered_cross(x.data(), y.data(), x.size(), mx, my);
}

double residual_sq(std::span<const double> x, std::span<const double> y, double slope,
                   double intercept) {
  require_same(x.size(), y.size());
  return active_table().residual_sq(x.data(), y.data(), x.size(), slope, intercept);
}

Moments moments(std::span<const double> x) { return active_table().moments(x.data(), x.size()); }

}  // namespace rldx::kernels
