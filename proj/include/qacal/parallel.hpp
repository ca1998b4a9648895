#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace qacal {

// Runs fn(begin, end) over disjoint contiguous blocks of [0, n).
// Partitioning depends only on n and the hardware thread count, so any
// reduction done block-by-block in block order is schedule-independent.
// Nested calls run inline to avoid oversubscription.
inline void parallel_for_blocks(std::size_t n,
                                const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  thread_local int depth = 0;
  unsigned hw = std::thread::hardware_concurrency();
  std::size_t n_blocks = hw == 0 ? 1 : hw;
  if (n_blocks > n) n_blocks = n;
  if (depth > 0 || n_blocks <= 1) {
    fn(0, n);
    return;
  }
  ++depth;
  std::size_t chunk = (n + n_blocks - 1) / n_blocks;
  std::vector<std::thread> workers;
  workers.reserve(n_blocks);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    std::size_t lo = b * chunk;
    std::size_t hi = lo + chunk < n ? lo + chunk : n;
    if (lo >= hi) break;
    workers.emplace_back([&fn, lo, hi] {
      ++depth;
      fn(lo, hi);
      --depth;
    });
  }
  for (auto& w : workers) w.join();
  --depth;
}

}  // namespace qacal
