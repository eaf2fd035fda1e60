#pragma once

#include <cstddef>
#include <functional>

namespace nodectrl {

/// Threads used by data-parallel loops: hardware concurrency, capped by the
/// NODECTRL_THREADS environment variable when set.
int effective_thread_count();

/// Runs fn(chunk_index, begin, end) over [0, total) split into a fixed number
/// of chunks. The chunk layout does not depend on the thread count, so
/// per-chunk accumulators reduced in chunk order give bit-identical results
/// whatever the parallelism.
void parallel_chunks(std::size_t total, std::size_t chunk_count,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

}  // namespace nodectrl
