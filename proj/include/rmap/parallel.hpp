#pragma once

#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace rmap {

// Worker count: RMAP_THREADS if set, otherwise 1. Parallel loops write
// per-index slots and reduce sequentially, so the thread count never
// changes results.
inline int worker_count() {
    if (const char* env = std::getenv("RMAP_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 1;
}

template <typename Fn>
void parallel_for(int count, Fn&& body) {
    int workers = worker_count();
    if (workers <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    workers = std::min(workers, count);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (int i = w; i < count; i += workers) {
                try {
                    body(i);
                } catch (...) {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    // Rethrow the lowest-index failure so the surfaced error is stable.
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace rmap
