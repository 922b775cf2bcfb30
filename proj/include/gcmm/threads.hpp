#pragma once

#include <cstddef>
#include <functional>

namespace gcmm {

// Worker count for parallel_blocks. 0 restores the default, which is the
// GCMM_THREADS environment variable when set, otherwise the hardware
// concurrency.
void set_num_threads(int n);
int num_threads();

// Runs fn(block_index, begin, end) over consecutive blocks of [0, n) with
// the given block size. Block boundaries depend only on n and block_size,
// never on the worker count, so callers that store one partial result per
// block and merge the partials in block index order get bit-identical
// output for any thread count.
void parallel_blocks(std::size_t n, std::size_t block_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

}  // namespace gcmm
