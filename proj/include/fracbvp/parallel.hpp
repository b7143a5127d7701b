#pragma once

#include <cstddef>
#include <functional>

namespace fracbvp {

/// Worker count: hardware concurrency, capped by the FRACBVP_THREADS
/// environment variable when it holds a positive integer.
std::size_t worker_count();

/// Runs body(i) for i in [0, count) on up to worker_count() threads. If any
/// call throws, the exception from the lowest index is rethrown after all
/// workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace fracbvp
