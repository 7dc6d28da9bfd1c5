#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace nobl {

// Fixed-size worker pool for index-parallel loops. Results must be written by
// index into caller-owned storage, which keeps output ordering deterministic
// regardless of thread count; reductions over such storage are performed by
// the caller in index order.
class ThreadPool {
public:
    explicit ThreadPool(std::size_t threads)
        : threads_(threads == 0 ? 1 : threads) {}

    std::size_t size() const { return threads_; }

    // Runs fn(i) for i in [0, count). Indices are split into contiguous
    // chunks, one per worker. The first exception thrown by any worker is
    // rethrown on the calling thread.
    void for_each_index(std::size_t count, const std::function<void(std::size_t)>& fn) const {
        if (count == 0) return;
        const std::size_t workers = std::min(threads_, count);
        if (workers == 1) {
            for (std::size_t i = 0; i < count; ++i) fn(i);
            return;
        }
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        const std::size_t chunk = (count + workers - 1) / workers;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t lo = w * chunk;
            const std::size_t hi = std::min(count, lo + chunk);
            pool.emplace_back([&, w, lo, hi] {
                try {
                    for (std::size_t i = lo; i < hi; ++i) fn(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

private:
    std::size_t threads_;
};

inline std::size_t default_thread_count() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<std::size_t>(hw);
}

} // namespace nobl
