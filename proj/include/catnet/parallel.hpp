#ifndef CATNET_PARALLEL_HPP
#define CATNET_PARALLEL_HPP

#include <cstdint>
#include <thread>
#include <vector>

namespace catnet {

int default_workers();
void set_default_workers(int n);

// Static block partition: worker w handles the contiguous block range
// [w * chunk, ...).  Each block writes only its own state, so the result is
// independent of the worker count and of scheduling.
template <typename Fn>
void parallel_blocks(std::uint64_t n_blocks, Fn&& fn, int workers = -1) {
  if (workers <= 0) workers = default_workers();
  if (workers <= 1 || n_blocks <= 1) {
    for (std::uint64_t b = 0; b < n_blocks; ++b) fn(b);
    return;
  }
  std::uint64_t w = static_cast<std::uint64_t>(workers);
  std::uint64_t chunk = (n_blocks + w - 1) / w;
  std::vector<std::thread> pool;
  for (std::uint64_t t = 0; t < w; ++t) {
    std::uint64_t lo = t * chunk;
    std::uint64_t hi = std::min(n_blocks, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::uint64_t b = lo; b < hi; ++b) fn(b);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace catnet

#endif  // CATNET_PARALLEL_HPP
