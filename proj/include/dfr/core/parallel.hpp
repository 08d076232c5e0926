#pragma once

#include <algorithm>

namespace dfr {

// Worker threads used by the matmul kernels and by tile rendering.
// Partitioning depends only on the job size and this count, so results
// are reproducible for a fixed configuration.
int thread_count();
void set_thread_count(int n);

// Static row partition: calls fn(begin, end) on each chunk.
template <class F>
void parallel_chunks(long n, F&& fn) {
  int nt = thread_count();
  if (n <= 0) return;
  if (nt <= 1 || n < 2 * nt) {
    fn(0L, n);
    return;
  }
  long chunk = (n + nt - 1) / nt;
#pragma omp parallel for schedule(static, 1) num_threads(nt)
  for (int i = 0; i < nt; ++i) {
    long b = i * chunk;
    long e = std::min(n, b + chunk);
    if (b < e) fn(b, e);
  }
}

}  // namespace dfr
