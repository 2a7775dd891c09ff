#pragma once

#include <cstddef>
#include <functional>

namespace oblique {

/// Thread count used by data-parallel loops. Defaults to 1; the CLI sets it
/// from --threads or OBLIQUE_VISC_THREADS.
int thread_count();
void set_thread_count(int n);

/// Splits [0, n) into contiguous chunks, one per thread. Chunk boundaries
/// depend only on n and the thread count, so per-index work is bit-identical
/// regardless of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace oblique
