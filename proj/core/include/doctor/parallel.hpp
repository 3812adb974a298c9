#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace doctor {

// Runs fn(i) for i in [0, n). Work item i always sees the same inputs
// (callers derive per-index seeds) and writes to its own output slot, so
// results do not depend on the thread count or schedule.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t nworkers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(nworkers);
  for (std::size_t w = 0; w < nworkers; ++w) {
    pool.emplace_back([&, w]() {
      for (std::size_t i = w; i < n; i += nworkers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace doctor
