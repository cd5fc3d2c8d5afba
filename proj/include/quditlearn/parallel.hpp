#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace quditlearn {

// Default worker count: QUDIT_LEARN_WORKERS if set, else 1 (fully serial).
inline int default_worker_count() {
    if (const char* env = std::getenv("QUDIT_LEARN_WORKERS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    return 1;
}

// Runs fn(i) for i in [0, n). Each index must write only its own output slot,
// which keeps results independent of the worker count. Exceptions are
// collected and the first one rethrown on the caller thread.
template <typename Fn>
inline void parallel_for(std::size_t n, int workers, Fn&& fn) {
    workers = std::max(1, workers);
    if (workers == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (std::size_t w = 0; w < nthreads; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += nthreads) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace quditlearn
