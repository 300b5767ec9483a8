#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace cevae {

namespace detail {
inline std::atomic<int>& thread_count_slot() {
  static std::atomic<int> v{1};
  return v;
}
} // namespace detail

// Worker count for parallel_for; n <= 0 picks hardware_concurrency.
inline void set_thread_count(int n) {
  if (n <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    n = hw == 0 ? 1 : static_cast<int>(hw);
  }
  detail::thread_count_slot().store(n);
}

inline int thread_count() { return detail::thread_count_slot().load(); }

// Static partition of [0, n) into contiguous chunks, one thread per chunk.
// Each index is written by exactly one invocation, so any kernel whose
// iteration i touches only output slot i is bit-identical to the serial run
// regardless of the thread count.
inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
  const int tc = thread_count();
  if (tc <= 1 || n < 2) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = static_cast<int>(tc < n ? tc : n);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const std::int64_t lo = n * w / workers;
    const std::int64_t hi = n * (w + 1) / workers;
    pool.emplace_back([lo, hi, &fn] {
      for (std::int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

} // namespace cevae
