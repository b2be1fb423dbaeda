#include <cmath>
#include <span>
#include <stdexcept>

#include "rldx/kernels.hpp"
#include "rldx/testbed.hpp"

namespace rldx::testbed {
namespace {

constexpr int kSizes[6][2] = {{TinyMlp::kHidden, TinyMlp::kIn}, {TinyMlp::kHidden, 1},
                              {TinyMlp::kHidden, TinyMlp::kHidden}, {TinyMlp::kHidden, 1},
                              {TinyMlp::kOut, TinyMlp::kHidden}, {TinyMlp::kOut, 1}};

// z = W x + b for a rows x cols weight matrix.
void affine(const std::vector<double>& w, const std::vector<double>& b,
            const std::vector<double>& x, std::vector<double>& z) {
  const std::size_t cols = x.size();
  z.resize(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    z[i] = kernels::dot(std::span(w).subspan(i * cols, cols), x) + b[i];
  }
}

void relu(const std::vector<double>& z, std::vector<double>& h) {
  h.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) h[i] = z[i] > 0.0 ? z[i] : 0.0;
}

void dropout(std::vector<double>& h, double rate, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  for (double& v : h) v = keep(rng) ? v * scale : 0.0;
}

}  // namespace

TinyMlp TinyMlp::zeros() {
  TinyMlp m;
  for (int t = 0; t < 6; ++t) m.p_[t].assign(static_cast<std::size_t>(kSizes[t][0] * kSizes[t][1]), 0.0);
  return m;
}

TinyMlp TinyMlp::he_init(std::mt19937_64& rng, double bias_init) {
  TinyMlp m = zeros();
  for (int t = 0; t < 6; t += 2) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / kSizes[t][1]));
    for (double& v : m.p_[t]) v = dist(rng);
    for (double& v : m.p_[t + 1]) v = bias_init;
  }
  return m;
}

std::size_t TinyMlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : p_) n += t.size();
  return n;
}

void TinyMlp::forward_cached(const std::vector<double>& x, Cache& c) const {
  c.x = x;
  affine(p_[0], p_[1], x, c.z1);
  relu(c.z1, c.h1);
  affine(p_[2], p_[3], c.h1, c.z2);
  relu(c.z2, c.h2);
  affine(p_[4], p_[5], c.h2, c.out);
}

std::vector<double> TinyMlp::forward(const std::vector<double>& x) const {
  Cache c;
  forward_cached(x, c);
  return c.out;
}

std::vector<double> TinyMlp::forward_dropout(const std::vector<double>& x, double rate,
                                             std::mt19937_64& rng) const {
  std::vector<double> z, h1, h2, out;
  affine(p_[0], p_[1], x, z);
  relu(z, h1);
  dropout(h1, rate, rng);
  affine(p_[2], p_[3], h1, z);
  relu(z, h2);
  dropout(h2, rate, rng);
  affine(p_[4], p_[5], h2, out);
  return out;
}

double TinyMlp::sgd_step(const std::vector<std::vector<double>>& xs, const std::vector<int>& actions,
                         const std::vector<double>& targets, double lr,
                         std::array<std::vector<double>, 6>* grads) {
  if (xs.empty() || xs.size() != actions.size() || xs.size() != targets.size()) {
    throw std::invalid_argument("sgd_step: batch inputs differ in length or are empty");
  }
  std::array<std::vector<double>, 6> g;
  for (int t = 0; t < 6; ++t) g[t].assign(p_[t].size(), 0.0);
  const double n = static_cast<double>(xs.size());
  double loss = 0.0;
  Cache c;
  std::vector<double> d3(kOut), d2(kHidden), d1(kHidden);
  for (std::size_t s = 0; s < xs.size(); ++s) {
    forward_cached(xs[s], c);
    const int a = actions[s];
    const double err = c.out[a] - targets[s];
    loss += err * err / n;
    std::fill(d3.begin(), d3.end(), 0.0);
    d3[a] = 2.0 * err / n;

    kernels::axpy(d3[a], c.h2, std::span(g[4]).subspan(a * kHidden, kHidden));
    g[5][a] += d3[a];
    for (int j = 0; j < kHidden; ++j) {
      d2[j] = c.z2[j] > 0.0 ? p_[4][a * kHidden + j] * d3[a] : 0.0;
    }
    for (int i = 0; i < kHidden; ++i) {
      if (d2[i] == 0.0) continue;
      kernels::axpy(d2[i], c.h1, std::span(g[2]).subspan(i * kHidden, kHidden));
      g[3][i] += d2[i];
    }
    for (int j = 0; j < kHidden; ++j) {
      double acc = 0.0;
      if (c.z1[j] > 0.0) {
        for (int i = 0; i < kHidden; ++i) acc += p_[2][i * kHidden + j] * d2[i];
      }
      d1[j] = acc;
    }
    for (int i = 0; i < kHidden; ++i) {
      if (d1[i] == 0.0) continue;
      kernels::axpy(d1[i], c.x, std::span(g[0]).subspan(i * kIn, kIn));
      g[1][i] += d1[i];
    }
  }
  for (int t = 0; t < 6; ++t) kernels::axpy(-lr, g[t], p_[t]);
  if (grads) *grads = std::move(g);
  return loss;
}

}  // namespace rldx::testbed
