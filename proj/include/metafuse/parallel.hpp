#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "metafuse/error.hpp"

namespace metafuse {

// 0 means "use every hardware thread".
inline unsigned resolve_processes(unsigned requested) {
    if (requested != 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

inline unsigned parse_processes(const std::string& s) {
    if (s == "max") return 0;
    try {
        std::size_t used = 0;
        const long v = std::stol(s, &used);
        if (used == s.size() && v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw Error("processes", "expected a positive integer or 'max', got '" + s + "'");
}

/// Runs body(i) for i in [0, n) on up to `processes` threads. Tasks are
/// claimed from a shared counter, so bodies must only write to slots they
/// own. If several tasks throw, the exception of the lowest index wins so the
/// reported failure does not depend on scheduling.
template <class Body>
void parallel_for(std::size_t n, unsigned processes, Body&& body) {
    const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(resolve_processes(processes), n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex m;
    std::size_t failed_at = n;
    std::exception_ptr failure;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(m);
                if (i < failed_at) {
                    failed_at = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace metafuse
