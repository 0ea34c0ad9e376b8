#pragma once

#include <cstddef>
#include <functional>

namespace motility {

// Process-wide worker count used by parallel_for. 1 keeps everything on the
// calling thread.
void set_worker_count(int workers);
int worker_count();

// Runs fn(i) for i in [0, n). Work is split into contiguous static chunks and
// every index writes its own output slot, so results do not depend on the
// worker count. The first exception thrown by any chunk is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace motility
