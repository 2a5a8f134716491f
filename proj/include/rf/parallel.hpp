#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace rf {

inline int default_workers() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

// Splits [0, total) into `workers` contiguous chunks and runs
// fn(worker_index, begin, end) on each. Chunk boundaries depend only on
// (total, workers), so per-worker results can be reduced in worker order for
// a deterministic sum.
template <typename Fn>
void parallel_chunks(std::size_t total, int workers, Fn&& fn) {
  if (workers < 1) workers = 1;
  if (workers == 1 || total <= 1) {
    if (total > 0) fn(0, std::size_t{0}, total);
    return;
  }
  std::size_t chunk = (total + workers - 1) / workers;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    std::size_t begin = static_cast<std::size_t>(w) * chunk;
    if (begin >= total) break;
    std::size_t end = std::min(begin + chunk, total);
    threads.emplace_back([&fn, w, begin, end] { fn(w, begin, end); });
  }
  for (auto& t : threads) t.join();
}

}  // namespace rf
