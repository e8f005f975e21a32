#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace cnln {

/// Number of workers to use when the caller asks for "all cores".
inline unsigned default_workers() noexcept {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1u : hc;
}

/// Runs body(begin, end) over [0, n) split into contiguous blocks.
///
/// Blocks smaller than min_block are merged, so small loops stay on the
/// calling thread. The body must only write to indices inside its block; the
/// result is then independent of the worker count.
template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body, std::size_t min_block = 4096) {
    if (n == 0) return;
    const std::size_t max_blocks = std::max<std::size_t>(1, n / std::max<std::size_t>(1, min_block));
    const std::size_t blocks = std::min<std::size_t>(std::max(1u, workers), max_blocks);
    if (blocks <= 1) {
        body(std::size_t{0}, n);
        return;
    }
    std::vector<std::exception_ptr> errors(blocks);
    {
        std::vector<std::jthread> pool;
        pool.reserve(blocks - 1);
        auto run = [&](std::size_t b) {
            const std::size_t lo = n * b / blocks;
            const std::size_t hi = n * (b + 1) / blocks;
            try {
                body(lo, hi);
            } catch (...) {
                errors[b] = std::current_exception();
            }
        };
        for (std::size_t b = 1; b < blocks; ++b) pool.emplace_back(run, b);
        run(0);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// Runs task(i) for every i in [0, n) on up to `workers` threads, handing
/// out indices dynamically. Intended for coarse independent jobs.
template <class Task>
void parallel_tasks(std::size_t n, unsigned workers, Task&& task) {
    const std::size_t threads = std::min<std::size_t>(std::max(1u, workers), n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        task(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace cnln
