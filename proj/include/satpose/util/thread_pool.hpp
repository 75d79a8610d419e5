#pragma once

#include <cstddef>
#include <functional>

namespace satpose {

// Process-wide worker count. 0 = hardware concurrency, 1 = run inline.
void set_worker_threads(int n);
int worker_threads();

// Runs fn(i) for i in [0, n). Tasks must write disjoint outputs; any
// cross-task reduction is the caller's job and must happen in index order so
// results are bitwise identical for every thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace satpose
