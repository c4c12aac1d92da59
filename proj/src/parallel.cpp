#include "scr/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace scr {
namespace {

std::atomic<std::size_t> g_threads{1};
constexpr std::size_t kMinParallelWork = 1 << 16;

}  // namespace

void set_num_threads(std::size_t n) { g_threads = std::max<std::size_t>(n, 1); }

std::size_t num_threads() { return g_threads; }

void parallel_for_rows(std::size_t n, std::size_t work_per_item,
                       const std::function<void(std::size_t, std::size_t)>& fn) {
  const std::size_t workers = std::min(num_threads(), n);
  if (workers <= 1 || n * std::max<std::size_t>(work_per_item, 1) < kMinParallelWork) {
    if (n > 0) fn(0, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    const std::size_t end = std::min(n, begin + chunk);
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
}

}  // namespace scr
