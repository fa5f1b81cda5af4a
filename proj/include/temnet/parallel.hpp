#pragma once

#include <cstddef>
#include <functional>

namespace temnet {

// Thread count from TEMNET_THREADS, falling back to hardware concurrency.
int default_thread_count();

// Static-partition parallel map over [0, n). Tasks must write disjoint state;
// results are independent of scheduling. The first exception thrown by a task
// is rethrown on the calling thread.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

} // namespace temnet
