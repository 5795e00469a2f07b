#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ionbath {

// Runs fn(i) for every i in [0, total) across `workers` threads. fn must be
// pure per index (own RNG stream, own output slot), which makes the merged
// result independent of scheduling. The first exception thrown by any worker
// is rethrown after all threads join.
template <typename Fn>
void parallel_for_indexed(std::int64_t total, int workers, Fn&& fn) {
    if (workers < 1) workers = 1;
    if (workers == 1 || total <= 1) {
        for (std::int64_t i = 0; i < total; ++i) fn(i);
        return;
    }

    std::atomic<std::int64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto body = [&] {
        for (;;) {
            std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= total) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace ionbath
