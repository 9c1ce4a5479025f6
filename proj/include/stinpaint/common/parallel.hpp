#pragma once

#include <cstddef>
#include <functional>

namespace stinpaint {

/// Process-wide worker count for data-parallel loops (default 1).
void set_num_threads(int n);
int num_threads();

/// Runs fn(i) for i in [0, n) over contiguous, statically partitioned ranges.
/// Callers must write to disjoint outputs per index; any reduction across
/// indices happens afterwards in index order, so results do not depend on the
/// thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Asks the C allocator to keep freed tensor buffers for reuse instead of
/// returning them to the OS. Training reallocates the same large buffers every
/// step. No-op outside glibc.
void retain_freed_memory();

}  // namespace stinpaint
