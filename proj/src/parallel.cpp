#include "catnet/parallel.hpp"

#include <atomic>

namespace catnet {

namespace {
std::atomic<int> g_workers{0};  // 0 = hardware concurrency
}

int default_workers() {
  int w = g_workers.load();
  if (w > 0) return w;
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

void set_default_workers(int n) { g_workers.store(n); }

}  // namespace catnet
