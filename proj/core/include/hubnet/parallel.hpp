#pragma once

#include <cstddef>
#include <functional>

#include "hubnet/types.hpp"

namespace hubnet {

// Worker count: HUBNET_THREADS if set (clamped to >= 1), else hardware
// concurrency. Read once per call so tests can override per process.
std::size_t worker_count();

// Runs fn(i) for i in [0, count), splitting the range across worker threads.
// Falls back to a plain loop when only one worker is available or when
// already inside a parallel_for (no nested thread pools). Callers keep
// determinism by writing to disjoint, index-addressed slots; any reduction
// must happen sequentially afterwards. The first exception thrown by a
// worker is rethrown on the calling thread.
void parallel_for(Index count, const std::function<void(Index)>& fn);

}  // namespace hubnet
