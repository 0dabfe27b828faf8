#pragma once

#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace thermal {

// Runs fn(i) for i in [0, n). Work items must be independent; any shared
// accumulation has to happen after the call, in index order, so results do
// not depend on the thread count.
inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn,
                         int max_threads = 0) {
    if (n <= 0) return;
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    int threads = max_threads > 0 ? std::min(max_threads, hw) : hw;
    threads = static_cast<int>(std::min<std::int64_t>(threads, n));
    if (threads <= 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t]() {
            for (std::int64_t i = t; i < n; i += threads) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace thermal
