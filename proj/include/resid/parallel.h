// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace resid {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    return int(std::max(1u, std::thread::hardware_concurrency()));
}

// Runs body(item, worker) for item in [0, count) on `threads` workers.
// Items are handed out dynamically; callers that need reproducible output
// must make each item's result independent of the worker that ran it, or
// keep per-worker state and accept worker-count dependence.
template <typename F> void parallel_for(int count, int threads, F &&body) {
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) body(i, 0);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            try {
                for (int i = next++; i < count; i = next++) body(i, w);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next = count;
            }
        });
    for (auto &t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// Static round-robin assignment: worker w runs items w, w + T, w + 2T, ...
// Per-worker accumulators then hold the same items on every run with the
// same worker count.
template <typename F> void parallel_for_static(int count, int threads, F &&body) {
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) body(i, 0);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            try {
                for (int i = w; i < count; i += threads) body(i, w);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    for (auto &t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace resid
