#pragma once

#include <cstddef>
#include <functional>

namespace swarmk {

/// Worker count: `requested` if non-zero, else the hardware concurrency,
/// capped by the SWARMK_THREADS environment variable when set.
std::size_t worker_count(std::size_t requested = 0);

/// Calls body(i) for every i in [0, n) on up to `threads` workers. Each index
/// runs exactly once; the first exception is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace swarmk
