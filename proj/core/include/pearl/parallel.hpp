#pragma once

#include <cstddef>
#include <functional>

namespace pearl {

/// Worker cap from PEARL_THREADS, else the hardware concurrency (at least 1).
int default_thread_count();

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index runs exactly once;
/// callers write results into per-index slots so output does not depend on scheduling.
/// The first exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> &fn, int threads);

} // namespace pearl
