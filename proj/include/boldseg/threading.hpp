#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace boldseg {

// Process-wide worker cap, set once by the CLI's --threads flag.
inline std::atomic<int>& thread_cap() {
    static std::atomic<int> cap{0};  // 0 = use hardware concurrency
    return cap;
}

inline void set_thread_cap(int n) { thread_cap().store(n > 0 ? n : 0); }

inline int effective_threads() {
    int cap = thread_cap().load();
    if (cap > 0) return cap;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(begin, end) over a fixed contiguous chunking of [0, n).
// The chunking depends only on n and the thread count, and chunks write to
// disjoint ranges in every use in this library, so results do not depend on
// scheduling.
inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn,
                         int threads = 0) {
    if (n <= 0) return;
    int t = threads > 0 ? threads : effective_threads();
    if (t > n) t = static_cast<int>(n);
    if (t <= 1) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(t - 1);
    std::int64_t chunk = (n + t - 1) / t;
    for (int i = 1; i < t; ++i) {
        std::int64_t b = i * chunk, e = std::min<std::int64_t>(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back(fn, b, e);
    }
    fn(0, std::min<std::int64_t>(n, chunk));
    for (auto& th : pool) th.join();
}

}  // namespace boldseg
