#pragma once

#include <cstddef>
#include <functional>

namespace posphase {

// Calls fn(i) for every i in [0, n) on up to `threads` workers (the caller's
// thread counts as one). Work is claimed dynamically, so fn must only write
// to per-index state. The exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace posphase
