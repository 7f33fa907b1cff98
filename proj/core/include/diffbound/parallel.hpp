#pragma once

#include <cstddef>
#include <functional>

namespace diffbound {

// Worker-pool size: DIFFBOUND_THREADS if set, else hardware concurrency.
std::size_t worker_count();

// Run body(i) for i in [0, count). Work is split into contiguous blocks, so
// results written to per-index slots are identical for any thread count.
// Nested calls degrade to serial execution. The first exception thrown by a
// body is rethrown on the calling thread after all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace diffbound
