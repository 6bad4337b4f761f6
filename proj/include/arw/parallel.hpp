#ifndef ARW_PARALLEL_HPP
#define ARW_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace arw {

/// Worker count used when a caller passes 0.
[[nodiscard]] int default_workers() noexcept;

/// Calls body(i) for i in [0, n) on up to `workers` threads. Each index is
/// processed exactly once; callers store results by index, so the outcome
/// does not depend on scheduling. The first exception thrown is rethrown.
template <class Body>
void parallel_for(std::size_t n, int workers, Body&& body)
{
    if (workers <= 0)
        workers = default_workers();
    const auto threads = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(workers), n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (;;) {
                    const auto i = next.fetch_add(1);
                    if (i >= n)
                        return;
                    try {
                        body(i);
                    } catch (...) {
                        const std::lock_guard lock{error_mutex};
                        if (!error)
                            error = std::current_exception();
                        next.store(n);
                    }
                }
            });
    }
    if (error)
        std::rethrow_exception(error);
}

/// Maps run indices to results in index order.
template <class Result, class Body>
std::vector<Result> parallel_map(std::size_t n, int workers, Body&& body)
{
    std::vector<Result> out(n);
    parallel_for(n, workers, [&](std::size_t i) { out[i] = body(i); });
    return out;
}

} // namespace arw

#endif
