#pragma once

#include <cstddef>
#include <functional>

namespace matchkit {

/// Worker count: an explicit override if set, else MATCHKIT_THREADS, else the
/// number of hardware threads.
std::size_t thread_count();

/// Overrides the worker count for this process; 0 restores the default.
void set_thread_count(std::size_t threads);

/// Splits [0, n) into contiguous chunks and runs `body(begin, end, chunk)` on
/// each, concurrently. The chunking depends only on `n` and `chunks`, so
/// per-chunk partial results can be merged in chunk order deterministically.
void parallel_chunks(std::size_t n, std::size_t chunks,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

/// Runs `body(i)` for every i in [0, n).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace matchkit
