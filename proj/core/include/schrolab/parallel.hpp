#pragma once

#include <cstddef>
#include <functional>

namespace schrolab {

// Worker count from SCHROLAB_THREADS (default 1).
int thread_count();

// Runs body(i) for i in [0, count).  Each index is independent; results must be
// written to per-index slots so output is independent of scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace schrolab
