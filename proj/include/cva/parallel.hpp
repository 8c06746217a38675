#pragma once

#include <functional>

namespace cva {

/// Worker count for internal parallel loops. Reads CVA_THREADS once; defaults to the
/// hardware concurrency.
int max_threads();

/// Overrides the worker count (0 restores the environment/hardware default).
void set_max_threads(int threads);

/// Runs fn(i) for i in [begin, end) over contiguous static chunks. Callers must make
/// every fn(i) write disjoint state, so results do not depend on the thread count.
void parallel_for(int begin, int end, const std::function<void(int)>& fn);

}  // namespace cva
