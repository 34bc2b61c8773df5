#pragma once

#include <cstddef>
#include <functional>

namespace scendo {

/// Worker count used when a caller passes 0: hardware_concurrency() unless overridden
/// process-wide (the CLI's --threads flag).
std::size_t default_threads();
void set_default_threads(std::size_t n);

/// Calls body(i) for i in [0, n) on up to `threads` workers (0 = default). Each index is
/// handled exactly once; results must be written to per-index slots so the outcome does not
/// depend on scheduling. The first exception thrown by a body is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, std::size_t threads = 0);

}  // namespace scendo
