#pragma once

#include <cstddef>
#include <functional>

namespace hwmor {

/// Resolves a worker-count knob: 0 means hardware concurrency, never less than 1.
unsigned resolve_workers(int requested) noexcept;

/// Calls body(i) for i in [0, count). Work is split into contiguous chunks, so
/// results written by index are independent of the worker count. The first
/// exception thrown by any worker is rethrown on the calling thread.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& body);

}  // namespace hwmor
