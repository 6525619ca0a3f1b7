#pragma once

#include <cstddef>
#include <functional>

namespace ape {

/// Worker cap for all internal parallel loops; 0 means hardware concurrency.
void set_thread_limit(unsigned n);
unsigned thread_limit();

/// Calls fn(i) for i in [0, n). Work is split into contiguous chunks, so
/// results written to per-index slots do not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace ape
