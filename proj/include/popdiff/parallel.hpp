#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace popdiff {

/// Worker count: POPDIFF_THREADS if set (>= 1), else hardware concurrency.
inline int thread_count() {
    if (const char* env = std::getenv("POPDIFF_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) return n;
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace detail {
inline thread_local bool inside_parallel_for = false;
}

/// Runs fn(i) for i in [0, count). Each index is visited exactly once; callers
/// write results to per-index slots so output does not depend on scheduling.
/// The first exception thrown by any task is rethrown on the calling thread.
/// Nested calls run serially on the enclosing worker.
template <class Fn>
void parallel_for(int count, Fn&& fn) {
    const int workers = detail::inside_parallel_for ? 1 : std::min(thread_count(), count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        const bool outer = detail::inside_parallel_for;
        detail::inside_parallel_for = true;
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= count) break;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(count);
            }
        }
        detail::inside_parallel_for = outer;
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int t = 1; t < workers; ++t) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace popdiff
