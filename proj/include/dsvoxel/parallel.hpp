// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <thread>
#include <vector>

namespace dsvoxel {

/// Worker count: DSVOXEL_THREADS env var if set, else hardware concurrency.
inline unsigned thread_count() {
  if (const char* env = std::getenv("DSVOXEL_THREADS")) {
    const long n = std::atol(env);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

/// Runs fn(begin, end) over a static partition of [0, n). Callers own
/// determinism: workers must only write to disjoint, index-addressed slots;
/// any cross-item reduction happens after the join, in index order.
template <typename F>
void parallel_for(std::size_t n, F&& fn) {
  const unsigned workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1) {
    if (n > 0) fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : pool) t.join();
}

/// Deterministic pairwise-tree sum over values[0, n). Fixed association order,
/// independent of thread count.
inline double pairwise_sum(const double* values, std::size_t n) {
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, n - half);
}

}  // namespace dsvoxel
