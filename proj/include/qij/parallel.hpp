#pragma once

#include <cstddef>
#include <functional>

namespace qij {

/// Worker count: `requested` if positive, else QIJ_THREADS, else the
/// hardware concurrency (at least 1).
int resolve_threads(int requested);

/// Runs task(i) for i in [0, count) on up to `threads` workers. Tasks must
/// write only to their own slot; callers reduce in index order afterwards.
/// The first exception thrown by any task is rethrown after all workers stop.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& task);

}  // namespace qij
