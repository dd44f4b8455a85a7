#pragma once

#include <functional>

namespace avgqoc {

/// requested > 0 wins; otherwise AVGQOC_THREADS, otherwise the hardware count.
int workerCount(int requested = 0);

/// Runs fn(0..n-1) on up to `threads` workers. fn must not throw.
void parallelFor(int n, int threads, const std::function<void(int)>& fn);

}  // namespace avgqoc
