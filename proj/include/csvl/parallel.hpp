#pragma once

#include <functional>

namespace csvl {

// Worker count: hardware concurrency capped by the CSVL_THREADS
// environment variable (values < 1 mean serial).
int max_threads();

// Runs fn(i) for i in [0, n) across max_threads() workers. fn must be
// safe to call concurrently for distinct i.
void parallel_for(int n, const std::function<void(int)>& fn);

} // namespace csvl
