#pragma once

#include <cstddef>
#include <functional>

namespace scr {

// Worker count used by row-parallel kernels. Defaults to 1.
void set_num_threads(std::size_t n);
std::size_t num_threads();

// Splits [0, n) into contiguous chunks and runs fn(begin, end) on each.
// Chunks never share output rows, so results do not depend on the worker
// count. Small ranges (n * work_per_item below a threshold) run inline.
void parallel_for_rows(std::size_t n, std::size_t work_per_item,
                       const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace scr
