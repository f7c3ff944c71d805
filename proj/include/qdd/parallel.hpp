#pragma once

#include <cstdint>
#include <omp.h>

namespace qdd {

inline int resolve_threads(int requested) {
    return requested > 0 ? requested : omp_get_max_threads();
}

// Deterministic parallel sweep over [0, n): work is split into fixed blocks
// that any thread may pick up; callers combine per-block results in block
// order afterwards, so output never depends on the schedule or thread count.
template <class BlockFn>
void for_each_block(std::int64_t n, std::int64_t block_size, int threads,
                    BlockFn&& fn) {
    const std::int64_t blocks = (n + block_size - 1) / block_size;
#pragma omp parallel for schedule(dynamic) num_threads(resolve_threads(threads))
    for (std::int64_t b = 0; b < blocks; ++b) {
        const std::int64_t lo = b * block_size;
        const std::int64_t hi = lo + block_size < n ? lo + block_size : n;
        fn(b, lo, hi);
    }
}

}  // namespace qdd
