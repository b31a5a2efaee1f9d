#include "geoxray/parallel.hpp"

#include <atomic>

namespace geoxray {

namespace {
std::atomic<int> g_threads{0};
}

int thread_count() {
  const int n = g_threads.load();
  if (n > 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

void set_thread_count(int n) { g_threads.store(std::max(0, n)); }

}  // namespace geoxray
