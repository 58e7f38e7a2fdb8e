#pragma once

#include <cstddef>
#include <functional>

namespace dirrisk {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Callers write results
/// into index-addressed slots, so output never depends on the worker count.
/// The exception from the lowest failing index is rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace dirrisk
