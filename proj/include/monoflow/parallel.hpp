#pragma once

#include <cstddef>
#include <functional>

namespace monoflow {

// Worker count used by cache builds and per-grid-point solves. 0 = hardware concurrency.
void set_num_threads(int n);
int num_threads();

// Runs fn(i) for i in [0, n); results must be written to slot i so order of completion
// does not matter.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace monoflow
