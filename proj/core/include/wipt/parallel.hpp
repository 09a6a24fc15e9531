#pragma once

#include <cstddef>
#include <functional>

namespace wipt {

/// Process-wide cap on worker threads used by library loops. 0 means
/// "hardware concurrency". Results never depend on this value.
void set_max_threads(unsigned n);
unsigned max_threads();

/// Calls body(i) for i in [0, n). Work is split into contiguous chunks;
/// body must only write to slots owned by index i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace wipt
