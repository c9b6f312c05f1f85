#pragma once

#include <functional>

namespace eit {

/// Runs fn(i) for i in [0, n) across up to `threads` workers (threads <= 1
/// runs inline). Work items must be independent. The first exception thrown
/// by any worker is rethrown on the calling thread after all workers join.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

} // namespace eit
