#pragma once

// Deterministic path-parallel execution: each path id owns an RNG stream, so
// numeric output is bit-identical for any worker count. Per-path results are
// written to preassigned slots and reduced in fixed path-id order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace ouqv::par {

// Runs fn(path_id) for path_id in [0, count), distributing contiguous blocks
// over `workers` threads. fn must only touch state owned by its path id.
inline void for_each_path(std::int64_t count, int workers,
                          const std::function<void(std::int64_t)>& fn) {
    if (workers < 1) throw std::invalid_argument("for_each_path: workers must be >= 1");
    if (count <= 0) return;
    if (workers == 1 || count == 1) {
        for (std::int64_t p = 0; p < count; ++p) fn(p);
        return;
    }
    const int nw = static_cast<int>(std::min<std::int64_t>(workers, count));
    std::vector<std::thread> threads;
    std::exception_ptr error;
    std::mutex error_mutex;
    threads.reserve(static_cast<std::size_t>(nw));
    for (int w = 0; w < nw; ++w) {
        const std::int64_t lo = count * w / nw;
        const std::int64_t hi = count * (w + 1) / nw;
        threads.emplace_back([&, lo, hi]() {
            try {
                for (std::int64_t p = lo; p < hi; ++p) fn(p);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

// Streaming mean/variance accumulator (Welford).
struct RunningStat {
    std::int64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double stderr_mean() const {
        return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
    }
};

} // namespace ouqv::par
