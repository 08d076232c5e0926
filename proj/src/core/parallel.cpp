#include "dfr/core/parallel.hpp"

#include <omp.h>

#include <atomic>

namespace dfr {

namespace {
std::atomic<int> g_threads{0};
}

int thread_count() {
  int n = g_threads.load(std::memory_order_relaxed);
  if (n > 0) return n;
  return omp_get_max_threads();
}

void set_thread_count(int n) { g_threads.store(n > 0 ? n : 0, std::memory_order_relaxed); }

}  // namespace dfr
