#pragma once

#include <cstddef>
#include <functional>

namespace fidmag {

/// Worker count used when `threads` is 0: FIDMAG_THREADS if set, else the
/// hardware concurrency.
unsigned default_threads();

/// Calls fn(i) for i in [0, n) on up to `threads` workers. Work is handed out
/// one index at a time; the first exception thrown is rethrown after all
/// workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  unsigned threads = 0);

}  // namespace fidmag
