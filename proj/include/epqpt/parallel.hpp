#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace epqpt {

inline int default_threads() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

// Runs fn(i) for i in [0, n) on up to `threads` workers (<= 0: default).
// Results must be written to per-index slots by fn; the lowest-index
// exception is rethrown after all workers finish.
inline void parallel_for(long n, int threads, const std::function<void(long)>& fn) {
    if (threads <= 0) threads = default_threads();
    if (n <= 0) return;
    if (threads == 1 || n == 1) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
    auto worker = [&] {
        for (long i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[static_cast<size_t>(i)] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const long t = std::min<long>(threads, n);
    for (long k = 0; k < t; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace epqpt
