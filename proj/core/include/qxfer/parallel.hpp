#pragma once

#include <cstddef>
#include <functional>

namespace qxfer {

// 0 means "use available hardware parallelism".
std::size_t resolve_threads(std::size_t requested);

// Splits [0, count) into contiguous chunks, one per worker, and calls
// body(begin, end) for each. The partition depends only on count and the
// resolved thread count, so results written by index are deterministic.
// The first exception thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace qxfer
