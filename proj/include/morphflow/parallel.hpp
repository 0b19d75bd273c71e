#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace morphflow {

// Chunk size is fixed so that chunked reductions combine in the same order
// regardless of how many worker threads ran; outputs stay bit-identical
// across thread counts.
inline constexpr int kParallelChunk = 64;

/// Resolves a thread-count setting: 0 means all hardware threads, negative
/// means "unset" (falls back to MORPHFLOW_THREADS, then all cores).
inline int resolve_threads(int requested) {
    if (requested < 0) {
        if (const char* env = std::getenv("MORPHFLOW_THREADS")) {
            requested = std::atoi(env);
        } else {
            requested = 0;
        }
    }
    if (requested <= 0) {
        unsigned hw = std::thread::hardware_concurrency();
        requested = hw == 0 ? 1 : static_cast<int>(hw);
    }
    return std::max(1, requested);
}

/// Runs fn(begin, end) over fixed-size chunks of [0, n), distributing chunks
/// across `threads` workers. fn must only write to per-index or per-chunk
/// slots; combine partial results serially afterwards.
template <typename Fn>
void parallel_chunks(int n, int threads, Fn&& fn) {
    if (n <= 0) return;
    threads = resolve_threads(threads);
    const int chunks = (n + kParallelChunk - 1) / kParallelChunk;
    if (threads == 1 || chunks == 1) {
        for (int c = 0; c < chunks; ++c) {
            const int b = c * kParallelChunk;
            fn(c, b, std::min(n, b + kParallelChunk));
        }
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                const int c = next.fetch_add(1);
                if (c >= chunks) return;
                const int b = c * kParallelChunk;
                fn(c, b, std::min(n, b + kParallelChunk));
            }
        });
    }
    for (auto& th : pool) th.join();
}

inline int chunk_count(int n) { return (n + kParallelChunk - 1) / kParallelChunk; }

}  // namespace morphflow
