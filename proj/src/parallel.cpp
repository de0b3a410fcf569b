#include "wavexp/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace wavexp {

namespace {
int g_threads = []() {
    unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::clamp(hw, 1u, 8u));
}();
}  // namespace

int num_threads() { return g_threads; }

void set_num_threads(int n) { g_threads = std::max(1, n); }

int parallel_chunk_count(int64_t n) {
    if (n <= 0) return 0;
    return static_cast<int>(std::min<int64_t>(g_threads, n));
}

void parallel_chunks(int64_t n, const std::function<void(int, int64_t, int64_t)>& fn) {
    int chunks = parallel_chunk_count(n);
    if (chunks <= 0) return;
    if (chunks == 1) {
        fn(0, 0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(chunks) - 1);
    auto run = [&](int t) { fn(t, t * n / chunks, (t + 1) * n / chunks); };
    for (int t = 1; t < chunks; ++t) pool.emplace_back(run, t);
    run(0);
    for (auto& th : pool) th.join();
}

void parallel_for(int64_t n, const std::function<void(int64_t)>& fn) {
    if (n <= 0) return;
    int workers = static_cast<int>(std::min<int64_t>(g_threads, n));
    if (workers <= 1) {
        for (int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int64_t> next{0};
    auto run = [&]() {
        for (;;) {
            int64_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers) - 1);
    for (int t = 1; t < workers; ++t) pool.emplace_back(run);
    run();
    for (auto& th : pool) th.join();
}

}  // namespace wavexp
