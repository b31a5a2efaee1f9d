#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace geoxray {

/// Worker count for operator applications. 1 gives the deterministic
/// single-threaded path. Defaults to std::thread::hardware_concurrency().
int thread_count();
void set_thread_count(int n);

/// Splits [0, count) into contiguous chunks, one per worker; fn(lo, hi, worker).
template <typename Fn>
void parallel_chunks(std::size_t count, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(
      std::max(1, std::min<int>(thread_count(), static_cast<int>(std::max<std::size_t>(count, 1)))));
  if (workers == 1) {
    fn(std::size_t{0}, count, std::size_t{0});
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = count * w / workers;
    const std::size_t hi = count * (w + 1) / workers;
    pool.emplace_back([&fn, lo, hi, w] { fn(lo, hi, w); });
  }
}

inline std::size_t chunk_count(std::size_t count) {
  return static_cast<std::size_t>(
      std::max(1, std::min<int>(thread_count(), static_cast<int>(std::max<std::size_t>(count, 1)))));
}

}  // namespace geoxray
