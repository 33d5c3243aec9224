#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rbmlab {

/// Execution settings shared by the stepping routines. Results never depend on
/// `threads`; every random draw is keyed by its logical index.
struct Exec {
    unsigned threads = 1;
};

/// Calls body(begin, end) over disjoint chunks of [0, n).
template <class Body>
void parallel_for(std::size_t n, Exec exec, Body&& body) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, exec.threads), n);
    if (workers <= 1) {
        if (n > 0) body(std::size_t{0}, n);
        return;
    }
    std::exception_ptr failure;
    std::mutex guard;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                body(lo, hi);
            } catch (...) {
                std::lock_guard lock(guard);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace rbmlab
