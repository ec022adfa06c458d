#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace idskit {

/// Process-wide default thread budget for internal parallelism.
/// Parallel loops partition work by index, so results are identical for any
/// budget; only wall time changes.
int thread_budget();
void set_thread_budget(int n);

/// Runs fn(i) for i in [0, n). Each index is handled by exactly one thread
/// and writes only to its own output slots, keeping results deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  int budget = 0);

}  // namespace idskit
