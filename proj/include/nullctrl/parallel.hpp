#pragma once

// Small fixed-size worker pool for independent sweep points. Results land in
// input order, so output never depends on scheduling.

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <optional>
#include <thread>
#include <vector>

namespace nullctrl {

/// Worker count from NULLCTRL_THREADS (default 1, the reference mode).
inline int worker_threads() {
  const char* env = std::getenv("NULLCTRL_THREADS");
  if (!env) return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (end == env || n < 1) return 1;
  return static_cast<int>(n > 256 ? 256 : n);
}

/// Runs fn(0..n−1) on up to `threads` workers. The first failing index (lowest) rethrows.
template <class R>
std::vector<R> parallel_map(int n, int threads, const std::function<R(int)>& fn) {
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int count = std::max(1, std::min(threads, n));
  if (count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace nullctrl
