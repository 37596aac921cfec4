#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace tbpos {

/// Effective worker count: `requested` if positive, otherwise the hardware
/// concurrency (at least 1).
inline int resolve_workers(int requested) {
  if (requested > 0) {
    return requested;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(begin, end) over contiguous sub-ranges of [0, n) on `workers`
/// threads. The split is by index only; callers are responsible for making
/// the combined result independent of the partitioning.
template <typename Fn>
void parallel_for(std::int64_t n, int workers, const Fn& fn) {
  workers = resolve_workers(workers);
  if (n <= 0) {
    return;
  }
  if (workers == 1 || n == 1) {
    fn(std::int64_t(0), n);
    return;
  }
  const int used = static_cast<int>(std::min<std::int64_t>(workers, n));
  const std::int64_t chunk = (n + used - 1) / used;
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(used));
  for (int w = 0; w < used; ++w) {
    const std::int64_t begin = w * chunk;
    const std::int64_t end = std::min<std::int64_t>(begin + chunk, n);
    if (begin >= end) {
      break;
    }
    threads.emplace_back([begin, end, &fn] { fn(begin, end); });
  }
  for (auto& t : threads) {
    t.join();
  }
}

}  // namespace tbpos
