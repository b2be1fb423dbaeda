#include "rldx/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rldx/digest.hpp"
#include "rldx/error.hpp"
#include "rldx/kernels.hpp"

namespace rldx {

Series Series::make(std::vector<std::int64_t> index, std::vector<double> values) {
  if (index.size() != values.size()) {
    throw std::invalid_argument("series index and values differ in length");
  }
  for (std::size_t i = 1; i < index.size(); ++i) {
    if (index[i] <= index[i - 1]) {
      throw std::invalid_argument("series indices must be strictly increasing (index " +
                                  std::to_string(index[i]) + " after " +
                                  std::to_string(index[i - 1]) + ")");
    }
  }
  Series s;
  s.index = std::move(index);
  s.values = std::move(values);
  return s;
}

Series Series::from_values(std::vector<double> values) {
  Series s;
  s.index.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) s.index[i] = static_cast<std::int64_t>(i);
  s.values = std::move(values);
  return s;
}

void Series::push_back(std::int64_t i, double v) {
  if (!index.empty() && i <= index.back()) {
    throw std::invalid_argument("series indices must be strictly increasing (index " +
                                std::to_string(i) + " after " + std::to_string(index.back()) +
                                ")");
  }
  index.push_back(i);
  values.push_back(v);
}

Series Series::slice(std::int64_t begin, std::int64_t end) const {
  const auto lo = std::lower_bound(index.begin(), index.end(), begin);
  const auto hi = std::lower_bound(index.begin(), index.end(), end);
  const auto a = static_cast<std::size_t>(lo - index.begin());
  const auto b = static_cast<std::size_t>(hi - index.begin());
  Series out;
  if (b > a) {
    out.index.assign(index.begin() + static_cast<std::ptrdiff_t>(a),
                     index.begin() + static_cast<std::ptrdiff_t>(b));
    out.values.assign(values.begin() + static_cast<std::ptrdiff_t>(a),
                      values.begin() + static_cast<std::ptrdiff_t>(b));
  }
  return out;
}

Series Series::tail(std::size_t n) const {
  if (n >= size()) return *this;
  const auto off = static_cast<std::ptrdiff_t>(size() - n);
  Series out;
  out.index.assign(index.begin() + off, index.end());
  out.values.assign(values.begin() + off, values.end());
  return out;
}

double mean(std::span<const double> v) {
  if (v.empty()) throw InsufficientDataError("mean of an empty vector");
  return kernels::sum(v) / static_cast<double>(v.size());
}

double population_std(std::span<const double> v) {
  const double m = mean(v);
  return std::sqrt(kernels::sum_sq_dev(v, m) / static_cast<double>(v.size()));
}

LinearFit linear_fit(const Series& s) {
  const std::size_t n = s.size();
  if (n < 2) {
    throw InsufficientDataError("linear_fit needs at least 2 points, got " + std::to_string(n));
  }
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(s.index[i]);
  const double dn = static_cast<double>(n);
  const double mx = kernels::sum(x) / dn;
  const double my = kernels::sum(s.values) / dn;
  const kernels::CrossSums c = kernels::centered_cross(x, s.values, mx, my);
  LinearFit fit;
  fit.slope = c.sxx > 0.0 ? c.sxy / c.sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  fit.rmse_residual = std::sqrt(kernels::residual_sq(x, s.values, fit.slope, fit.intercept) / dn);
  return fit;
}

double rmse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("rmse: length mismatch");
  if (a.empty()) throw std::invalid_argument("rmse: empty input");
  return std::sqrt(kernels::sum_sq_diff(a, b) / static_cast<double>(a.size()));
}

double max_abs_second_derivative(const Series& s, bool normalize, double min_range) {
  const std::size_t n = s.size();
  if (n < 3) {
    throw InsufficientDataError("second derivative needs at least 3 points, got " +
                                std::to_string(n));
  }
  std::vector<double> v = s.values;
  if (normalize) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double vmin = *lo;
    const double scale = std::max(*hi - vmin, min_range);
    if (!(scale > 0.0)) return 0.0;
    for (double& x : v) x = (x - vmin) / scale;
  }
  double best = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    best = std::max(best, std::abs(v[i + 1] - 2.0 * v[i] + v[i - 1]));
  }
  return best;
}

bool is_simplex(std::span<const double> p, double tol) {
  double total = 0.0;
  for (double x : p) {
    if (!std::isfinite(x) || x < 0.0) return false;
    total += x;
  }
  return !p.empty() && std::abs(total - 1.0) <= tol;
}

double normalized_entropy(std::span<const double> p) {
  if (p.size() < 2) throw std::invalid_argument("normalized_entropy: need K >= 2");
  if (!is_simplex(p)) throw std::invalid_argument("normalized_entropy: not a probability vector");
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h / std::log(static_cast<double>(p.size()));
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: length mismatch");
  if (!is_simplex(p) || !is_simplex(q)) {
    throw std::invalid_argument("kl_divergence: not a probability vector");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return kInfinity;
    kl += p[i] * std::log(p[i] / q[i]);
  }
  // Rounding can leave a tiny negative value for p == q up to the last ulp.
  return std::max(kl, 0.0);
}

double mc_dropout_dispersion(const std::vector<std::vector<std::vector<double>>>& samples) {
  const std::size_t S = samples.size();
  if (S < 2) {
    throw InsufficientDataError("MC dropout dispersion needs at least 2 samples, got " +
                                std::to_string(S));
  }
  const std::size_t B = samples[0].size();
  const std::size_t K = B ? samples[0][0].size() : 0;
  if (B == 0 || K == 0) throw std::invalid_argument("MC dropout samples have an empty dimension");
  const std::size_t cells = B * K;
  std::vector<double> plane(cells);
  std::vector<double> acc(cells, 0.0);
  auto flatten = [&](const std::vector<std::vector<double>>& sample) {
    if (sample.size() != B) throw std::invalid_argument("ragged MC dropout samples");
    for (std::size_t b = 0; b < B; ++b) {
      if (sample[b].size() != K) throw std::invalid_argument("ragged MC dropout samples");
      std::copy(sample[b].begin(), sample[b].end(), plane.begin() + static_cast<std::ptrdiff_t>(b * K));
    }
  };
  for (const auto& sample : samples) {
    flatten(sample);
    kernels::axpy(1.0, plane, acc);
  }
  const double inv_s = 1.0 / static_cast<double>(S);
  for (double& a : acc) a *= inv_s;
  std::vector<double> sq(cells, 0.0);
  for (const auto& sample : samples) {
    flatten(sample);
    for (std::size_t c = 0; c < cells; ++c) {
      const double d = plane[c] - acc[c];
      sq[c] += d * d;
    }
  }
  double total = 0.0;
  for (double v : sq) total += std::sqrt(v * inv_s);
  return total / static_cast<double>(cells);
}

bool strictly_monotone_decreasing(const Series& s, double tol) {
  if (s.size() < 2) return false;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (!(s.values[i] <= s.values[i - 1] + tol)) return false;
  }
  return linear_fit(s).slope < 0.0;
}

Series windowed_std(const Series& s, std::size_t window) {
  if (window == 0) throw std::invalid_argument("windowed_std: window must be positive");
  if (window > s.size()) {
    throw InsufficientDataError("windowed_std: window " + std::to_string(window) +
                                " exceeds series length " + std::to_string(s.size()));
  }
  Series out;
  out.index.reserve(s.size() - window + 1);
  out.values.reserve(s.size() - window + 1);
  const std::span<const double> all(s.values);
  for (std::size_t end = window; end <= s.size(); ++end) {
    out.index.push_back(s.index[end - 1]);
    out.values.push_back(population_std(all.subspan(end - window, window)));
  }
  return out;
}

Series windowed_std(std::span<const double> values, std::size_t window) {
  return windowed_std(Series::from_values({values.begin(), values.end()}), window);
}

TensorStats summarize_tensor(std::string name, std::span<const double> values) {
  TensorStats t;
  t.name = std::move(name);
  t.digest = content_digest(values);
  if (values.empty()) return t;
  const kernels::Moments m = kernels::moments(values);
  const double n = static_cast<double>(values.size());
  t.frac_zero = static_cast<double>(m.n_zero) / n;
  t.frac_nonfinite = static_cast<double>(m.n_nonfinite) / n;
  if (m.n_finite == 0) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    t.mean = t.std = t.min = t.max = t.l2_norm = nan;
    return t;
  }
  const double nf = static_cast<double>(m.n_finite);
  t.min = m.min;
  t.max = m.max;
  t.mean = std::clamp(m.sum / nf, t.min, t.max);
  t.l2_norm = std::sqrt(m.sum_sq);
  double dev = 0.0;
  if (m.n_nonfinite == 0) {
    dev = kernels::sum_sq_dev(values, t.mean);
  } else {
    for (double v : values) {
      if (std::isfinite(v)) dev += (v - t.mean) * (v - t.mean);
    }
  }
  t.std = std::sqrt(dev / nf);
  return t;
}

}  // namespace rldx
