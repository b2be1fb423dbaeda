#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rldx/trace.hpp"

namespace rldx {

/// Indexed scalar time series. Indices are strictly increasing.
struct Series {
  std::vector<std::int64_t> index;
  std::vector<double> values;

  /// Validates the invariants; throws std::invalid_argument.
  static Series make(std::vector<std::int64_t> index, std::vector<double> values);
  /// Indices 0..n-1.
  static Series from_values(std::vector<double> values);

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
  void push_back(std::int64_t i, double v);
  /// Points whose index lies in [begin, end).
  Series slice(std::int64_t begin, std::int64_t end) const;
  /// The last n points (all of them when n >= size()).
  Series tail(std::size_t n) const;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rmse_residual = 0.0;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Ordinary least squares on (index, value). Throws InsufficientDataError
/// for fewer than 2 points.
LinearFit linear_fit(const Series& s);

/// sqrt(mean((a_i - b_i)^2)). Throws std::invalid_argument on length mismatch
/// or empty input.
double rmse(std::span<const double> a, std::span<const double> b);

/// max_i |v[i+1] - 2 v[i] + v[i-1]|. With `normalize`, values are first
/// min-max rescaled to [0, 1] (indices are treated as unit-spaced). A range
/// below `min_range` is divided by `min_range` instead, so near-constant
/// series are not inflated to full scale. Throws InsufficientDataError for
/// fewer than 3 points.
double max_abs_second_derivative(const Series& s, bool normalize, double min_range = 0.0);

/// -sum p ln p / ln K, with 0 ln 0 = 0. Throws std::invalid_argument when p is
/// not a probability vector (tolerance 1e-6) or K < 2.
double normalized_entropy(std::span<const double> p);

/// sum p_i ln(p_i / q_i). Returns kInfinity when some q_i = 0 < p_i. Throws
/// std::invalid_argument on length mismatch or invalid simplex input.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// Mean over the B*K cells of the population std across S samples. `samples`
/// is S x B x K. Throws InsufficientDataError when S < 2 and
/// std::invalid_argument on ragged input.
double mc_dropout_dispersion(const std::vector<std::vector<std::vector<double>>>& samples);

/// v[i+1] <= v[i] + tol for every i, and the fitted slope is negative.
bool strictly_monotone_decreasing(const Series& s, double tol);

/// Sliding population std (stride 1), indexed by the index of each window's
/// last point. Throws InsufficientDataError when window > size.
Series windowed_std(const Series& s, std::size_t window);
/// Same, for plain values indexed 0..n-1.
Series windowed_std(std::span<const double> values, std::size_t window);

/// Population mean / std helpers.
double mean(std::span<const double> v);
double population_std(std::span<const double> v);

/// TensorStats of a raw tensor; mean/std/min/max/l2 over finite entries.
TensorStats summarize_tensor(std::string name, std::span<const double> values);

/// True when v is a probability vector within `tol`.
bool is_simplex(std::span<const double> p, double tol = 1e-6);

}  // namespace rldx
