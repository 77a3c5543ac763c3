#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace tspfcn {

/// Calls fn(i) for i in [0, count) on up to `jobs` threads. Indices are split into
/// contiguous blocks, so any per-index output is independent of the thread count.
/// The first exception thrown by a worker is rethrown on the caller.
template <typename Fn>
void parallel_for_index(std::size_t count, int jobs, Fn&& fn) {
    const std::size_t workers =
        std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            const std::size_t lo = count * w / workers;
            const std::size_t hi = count * (w + 1) / workers;
            try {
                for (std::size_t i = lo; i < hi; ++i) {
                    fn(i);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

} // namespace tspfcn
