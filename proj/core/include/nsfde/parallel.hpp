#pragma once

#include <functional>

namespace nsfde {

/// Resolve a worker count: `requested` if > 0, else the NSFDE_THREADS
/// environment variable, else hardware concurrency. Clamped to [1, 64].
int resolve_threads(int requested);

/// Run fn(i) for i in [0, n) on `threads` workers. Work items are claimed
/// via an atomic counter, so results must be written to slots indexed by i;
/// with that discipline the outcome is schedule-independent. If any item
/// throws, the exception from the smallest failing index is rethrown.
void parallel_for(long n, int threads, const std::function<void(long)>& fn);

}  // namespace nsfde
