#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace tvu {

/// Number of items per reduction block. Fixed so that results are combined in
/// the same order no matter how many workers run; changing thread count never
/// changes a single bit of the output.
inline constexpr std::size_t kReduceBlock = 64;

inline std::size_t block_count(std::size_t n_items) {
    return (n_items + kReduceBlock - 1) / kReduceBlock;
}

/// Runs fn(block_index, begin, end) for every fixed-size block of [0, n_items),
/// distributing blocks over `threads` workers. Each block writes only its own
/// slot; the caller combines slots in block order afterwards.
template <typename Fn>
void for_each_block(std::size_t n_items, unsigned threads, Fn&& fn) {
    const std::size_t nblocks = block_count(n_items);
    if (nblocks == 0) return;
    if (threads <= 1 || nblocks == 1) {
        for (std::size_t b = 0; b < nblocks; ++b) {
            const std::size_t lo = b * kReduceBlock;
            const std::size_t hi = std::min(n_items, lo + kReduceBlock);
            fn(b, lo, hi);
        }
        return;
    }
    const unsigned nworkers = static_cast<unsigned>(std::min<std::size_t>(threads, nblocks));
    std::vector<std::thread> pool;
    pool.reserve(nworkers);
    for (unsigned w = 0; w < nworkers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t b = w; b < nblocks; b += nworkers) {
                const std::size_t lo = b * kReduceBlock;
                const std::size_t hi = std::min(n_items, lo + kReduceBlock);
                fn(b, lo, hi);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace tvu
