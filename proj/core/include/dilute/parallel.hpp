#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace dilute {

// Resolve a requested thread budget: 0 means "decide for me", which honors
// DILUTE_THREADS if set and otherwise uses the hardware count.
inline int thread_budget(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DILUTE_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Run fn(i) for i in [0, n) on up to `threads` workers. Tasks must write only
// to slots indexed by i; results are then independent of scheduling, which is
// what makes run outputs byte-identical across thread budgets.
inline void parallel_for_index(long n, int threads, const std::function<void(long)>& fn) {
  threads = thread_budget(threads);
  if (threads <= 1 || n <= 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const int workers = static_cast<int>(std::min<long>(threads, n));
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const long i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(n, std::memory_order_relaxed);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace dilute
