#pragma once

#include <atomic>
#include <thread>
#include <vector>

namespace udseq {

// Worker cap: UDSEQ_THREADS if set (clamped to [1, 64]), otherwise
// hardware concurrency clamped to 8.
int worker_count();

// Runs fn(i) for i in [0, n). Caller must ensure fn(i) only writes
// per-index state so results are identical at any worker count.
template <class Fn>
void parallel_for(int n, Fn&& fn) {
  const int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace udseq
