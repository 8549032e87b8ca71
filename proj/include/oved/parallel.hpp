#pragma once

#include <cstddef>
#include <functional>

namespace oved {

// Worker count used by parallel_for. Initialized from the OVED_THREADS
// environment variable (default 1). Results never depend on this value:
// parallel loops write to disjoint slots and all reductions run in a fixed
// sequential order afterwards.
int thread_count();
void set_thread_count(int n);

// Runs fn(i) for i in [0, n). Block-partitioned across threads; falls back
// to a plain loop when one worker is configured or when already inside a
// parallel region. The first exception thrown by a worker is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace oved
