#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace frob {

/// Worker count: hardware concurrency capped by FROBENIUS_THREADS (if set).
unsigned worker_count();

/// Runs body(i) for i in [0, count). Each index is visited exactly once;
/// the first exception thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace frob
