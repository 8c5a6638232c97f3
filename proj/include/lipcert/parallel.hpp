#pragma once

#include <cstddef>
#include <functional>

namespace lipcert {

// Worker count: LIPCERT_THREADS when set to a positive integer, otherwise the hardware
// concurrency (at least 1).
std::size_t worker_count();

// Calls body(i) for i in [0, n) across worker_count() threads. Each index is visited exactly
// once; callers write results into per-index slots so reductions stay in index order.
// The first exception thrown by any body is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace lipcert
