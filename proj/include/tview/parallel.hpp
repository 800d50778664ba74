#pragma once

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace tview {

// Worker count: TVIEW_THREADS if set and positive, otherwise the machine's
// core count (at least 1).
inline int thread_count_from_env() {
  if (const char* env = std::getenv("TVIEW_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs f(i) for i in [0, n) across `threads` workers (0 = from environment).
// Each index is computed independently and lands in its own pre-sized slot
// on the caller's side, so results are identical for any thread count. The
// lowest-index exception wins if workers throw.
template <typename F>
void parallel_for(std::int64_t n, F&& f, int threads = 0) {
  if (n <= 0) return;
  if (threads <= 0) threads = thread_count_from_env();
  if (threads > n) threads = static_cast<int>(n);
  if (threads == 1) {
    for (std::int64_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> workers;
  workers.reserve(threads);
  const std::int64_t chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::int64_t lo = t * chunk;
    const std::int64_t hi = std::min(n, lo + chunk);
    workers.emplace_back([&, t, lo, hi] {
      try {
        for (std::int64_t i = lo; i < hi; ++i) f(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (std::thread& w : workers) w.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace tview
