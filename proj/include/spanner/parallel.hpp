#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace spanner {

// Resolves a requested thread count: 0 means "SPANNER_THREADS or hardware".
int resolve_threads(int requested);

// Runs body(i) for i in [0, n) on up to `threads` workers using static
// contiguous chunks. Callers write into per-index slots and merge in index
// order, which keeps results independent of the thread count.
template <typename Body>
void parallel_for(std::int64_t n, int threads, Body&& body) {
  if (n <= 0) return;
  const int workers = static_cast<int>(std::min<std::int64_t>(std::max(threads, 1), n));
  if (workers == 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const std::int64_t begin = n * w / workers;
    const std::int64_t end = n * (w + 1) / workers;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::int64_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace spanner
