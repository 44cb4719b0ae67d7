#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace rmap::detail {

inline int resolve_threads(int requested) {
    const unsigned hw = std::thread::hardware_concurrency();
    const int avail = hw == 0 ? 1 : static_cast<int>(hw);
    if (requested <= 0) return avail;
    return std::min(requested, avail);
}

// Runs fn(i) for i in [0, n). Work items must write to disjoint outputs.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, int n_threads = 0) {
    const int threads = resolve_threads(n_threads);
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t chunk = (n + threads - 1) / threads;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        const std::size_t lo = t * chunk;
        if (lo >= n) break;
        const std::size_t hi = std::min(n, lo + chunk);
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace rmap::detail
