#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace hypergibbs {

/// Worker count from HYPERGIBBS_WORKERS, else hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("HYPERGIBBS_WORKERS")) {
    try {
      int w = std::stoi(env);
      if (w >= 1) return static_cast<unsigned>(w);
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, count). Each index is handled exactly once; callers
/// write into slot i of a pre-sized buffer and reduce in index order, so results
/// do not depend on the worker count.
template <typename Body>
void parallel_for(std::size_t count, Body&& body, unsigned workers = 0) {
  if (workers == 0) workers = worker_count();
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr failure;
  auto run = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next >= count || failure) return;
        i = next++;
      }
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace hypergibbs
