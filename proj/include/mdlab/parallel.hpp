#pragma once

// Bounded parallel map used by every fan-out site (Carleman sampling,
// penalty-ladder comparisons, basin sweeps). Results are collected by
// job index, so the output never depends on scheduling order. The
// worker cap is process-global and set once by the CLI --threads flag
// before any work starts.

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mdlab {
namespace parallel {

inline std::atomic<int>& detail_worker_cap() {
    static std::atomic<int> cap{0};
    return cap;
}

// Current cap; 0 or negative means the hardware default.
inline int max_workers() {
    int c = detail_worker_cap().load();
    if (c > 0) return c;
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? (int)hw : 4;
}

inline void set_max_workers(int n) { detail_worker_cap().store(n); }

// Evaluates f(0), ..., f(count - 1) with at most max_workers() calls
// in flight and returns the results in index order. The first
// exception thrown by any job is rethrown after all workers stop.
template <typename R>
std::vector<R> map(int count, const std::function<R(int)>& f) {
    std::vector<R> out((size_t)std::max(count, 0));
    if (count <= 0) return out;
    int workers = std::min(max_workers(), count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) out[i] = f(i);
        return out;
    }
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex err_mtx;
    auto worker = [&] {
        for (;;) {
            if (failed.load()) return;
            int i = next.fetch_add(1);
            if (i >= count) return;
            try {
                out[i] = f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mtx);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

} // namespace parallel
} // namespace mdlab
