#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace epsense {

/// Run fn(0..n_tasks-1), each exactly once, on up to n_jobs threads.
/// Task indices are handed out from an atomic counter and results must be
/// written into per-index slots by the caller, so output is identical for
/// any job count. The first exception thrown by a task is rethrown here
/// after all threads join.
inline void parallel_for(int n_jobs, long n_tasks, const std::function<void(long)>& fn) {
    if (n_tasks <= 0) return;
    if (n_jobs <= 1 || n_tasks == 1) {
        for (long i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    const int workers = static_cast<int>(std::min<long>(n_jobs, n_tasks));
    std::atomic<long> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const long i = next.fetch_add(1);
                if (i >= n_tasks) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace epsense
