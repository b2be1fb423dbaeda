#pragma once

#include <algorithm>
#include <vector>

namespace rldx {

template <class T>
std::size_t longest_cycle_run(const std::vector<T>& seq) {
  const std::size_t n = seq.size();
  std::size_t best = 0;
  for (std::size_t p = 1; 2 * p <= n; ++p) {
    // run counts consecutive i with seq[i] == seq[i - p]; a stretch of `run`
    // such positions covers run + p items and holds two copies once run >= p.
    std::size_t run = 0;
    for (std::size_t i = p; i < n; ++i) {
      run = seq[i] == seq[i - p] ? run + 1 : 0;
      if (run >= p) best = std::max(best, run + p);
    }
  }
  return best;
}

template <class T>
std::size_t longest_identical_run(const std::vector<T>& seq) {
  std::size_t best = seq.empty() ? 0 : 1;
  std::size_t run = 1;
  for (std::size_t i = 1; i < seq.size(); ++i) {
    run = seq[i] == seq[i - 1] ? run + 1 : 1;
    best = std::max(best, run);
  }
  return best;
}

template <class T>
std::size_t common_prefix(const std::vector<T>& a, const std::vector<T>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  std::size_t i = 0;
  while (i < n && a[i] == b[i]) ++i;
  return i;
}

}  // namespace rldx
