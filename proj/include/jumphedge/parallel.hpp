#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace jumphedge {

/// Worker count to use when the caller passes 0.
inline unsigned default_threads() noexcept {
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls `body(i)` for every i in [0, n) on up to `threads` workers.
///
/// `body` must write its result into a slot owned by index i; the caller then
/// reduces the slots in index order, which keeps results bit-identical for any
/// worker count. If several indices throw, the exception of the lowest index is
/// rethrown after all workers have joined.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    if (threads == 0) threads = default_threads();
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));

    std::exception_ptr first_error;
    std::size_t first_error_index = n;
    std::mutex error_mutex;

    auto run_one = [&](std::size_t i) {
        try {
            body(i);
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (i < first_error_index) {
                first_error_index = i;
                first_error = std::current_exception();
            }
        }
    };

    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        constexpr std::size_t chunk = 16;
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t begin = next.fetch_add(chunk);
                    if (begin >= n) return;
                    const std::size_t end = std::min(n, begin + chunk);
                    for (std::size_t i = begin; i < end; ++i) run_one(i);
                }
            });
        }
    }
    if (first_error) std::rethrow_exception(first_error);
}

/// Running mean / standard error accumulator. Feed values in a fixed order.
class MeanAccumulator {
public:
    void add(double x) noexcept {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }

    std::size_t count() const noexcept { return n_; }
    double mean() const noexcept { return mean_; }
    double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double std_error() const noexcept {
        return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

} // namespace jumphedge
