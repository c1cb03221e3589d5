#pragma once

#include <algorithm>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace trislit {

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency).  Work is split by index, so results written to slot i are
/// identical for any worker count.  The first exception, if any, is
/// rethrown on the calling thread.
inline void parallel_for_index(long n, int threads, const std::function<void(long)>& fn) {
  if (n <= 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  long workers = threads > 0 ? threads : (hw ? hw : 1);
  workers = std::clamp<long>(workers, 1, n);
  if (workers == 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (long w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (long i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace trislit
