#pragma once

#include <cstddef>
#include <functional>

namespace plad {

/// 0 means: PLAD_THREADS if set, otherwise the hardware concurrency.
int resolve_threads(int requested);
/// Process-wide default used when callers pass 0.
void set_default_threads(int threads);
int default_threads();

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Work is split into
/// contiguous chunks; the first exception thrown is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads = 0);

}  // namespace plad
