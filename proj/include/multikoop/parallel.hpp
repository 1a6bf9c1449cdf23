#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace multikoop {

// Runs fn(i) for i in [0, n) on a worker pool. Results must be written to
// preallocated per-index slots so the outcome is independent of scheduling.
// The first exception thrown by any worker is rethrown after all join.
inline void parallel_for(long n, const std::function<void(long)>& fn, int n_threads = 0) {
  if (n <= 0) return;
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads <= 0) n_threads = hw > 0 ? hw : 4;
  if (n_threads > n) n_threads = static_cast<int>(n);
  if (n_threads <= 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }

  std::vector<std::thread> workers;
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::atomic<long> next{0};
  workers.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) {
    workers.emplace_back([&] {
      for (;;) {
        long i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace multikoop
