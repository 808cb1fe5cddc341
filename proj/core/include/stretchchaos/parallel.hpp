#pragma once

#include <functional>

namespace sc {

// Worker count: STRETCH_CHAOS_THREADS when set (>=1), else hardware
// concurrency.
int thread_budget();

// Runs fn(0..n-1); parallel when the budget allows, exceptions rethrown.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace sc
