#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace landscape {

/// Splits [0, n) into fixed-size chunks and runs `work(chunk_index, begin,
/// end)` across up to `threads` workers. Chunk boundaries depend only on n
/// and chunk_size, so per-chunk partial results merged in chunk order give
/// results independent of the worker count. work must only touch state owned
/// by its chunk slot.
template <typename WorkFn>
void for_each_chunk(std::size_t n, std::size_t chunk_size, int threads, WorkFn&& work) {
    if (n == 0) return;
    if (chunk_size == 0) chunk_size = 1;
    const std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
    const std::size_t n_workers =
        threads > 1 ? std::min<std::size_t>(static_cast<std::size_t>(threads), n_chunks) : 1;

    if (n_workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) {
            const std::size_t begin = c * chunk_size;
            const std::size_t end = std::min(n, begin + chunk_size);
            work(c, begin, end);
        }
        return;
    }

    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) {
        pool.emplace_back([&, w] {
            // Static striding keeps the chunk->worker map deterministic.
            for (std::size_t c = w; c < n_chunks; c += n_workers) {
                const std::size_t begin = c * chunk_size;
                const std::size_t end = std::min(n, begin + chunk_size);
                work(c, begin, end);
            }
        });
    }
    for (auto& t : pool) t.join();
}

inline int default_thread_count() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace landscape
