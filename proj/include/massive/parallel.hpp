#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace massive {

inline constexpr const char* kThreadsEnv = "MASSIVE_THREADS";

/// Worker count: $MASSIVE_THREADS wins, then `requested` (0 = hardware).
inline unsigned resolve_threads(unsigned requested = 0) {
  if (const char* env = std::getenv(kThreadsEnv)) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n). Work is split into contiguous blocks; results
/// must be written to per-index slots so the outcome is independent of the
/// thread count. The exception of the lowest failing block is rethrown.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t lo = n * t / threads;
    const std::size_t hi = n * (t + 1) / threads;
    pool.emplace_back([&, lo, hi, t] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace massive
