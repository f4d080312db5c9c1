#pragma once

#include <functional>

namespace mc {

/// Number of worker threads. Reads MODECONNECT_THREADS once on first use;
/// defaults to the hardware concurrency. Always at least 1.
int thread_count();

/// Splits [0, rows) into contiguous chunks and runs body(begin, end) on
/// each, possibly on worker threads. `work_per_row` is a rough flop count
/// used to skip threading for small problems. Each row is processed by
/// exactly one chunk, so results do not depend on the thread count.
void parallel_for_rows(int rows, std::size_t work_per_row, const std::function<void(int, int)>& body);

}  // namespace mc
