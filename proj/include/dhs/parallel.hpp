#pragma once

// Index-parallel loops. Results must be written to per-index slots so that
// the outcome does not depend on the number of workers.

#include <cstddef>
#include <functional>

namespace dhs {

/// Worker count used by parallel_for; 0 selects hardware concurrency.
void set_thread_count(unsigned count);
unsigned thread_count();

/// Calls body(i) for i in [0, count). The first exception (by index) is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace dhs
