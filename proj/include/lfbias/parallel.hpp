#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lfbias {

// Evaluates fn(i) for i in [0, n) on up to `workers` threads. Result slot i
// always holds fn(i), so the output does not depend on scheduling. If any
// call throws, the exception from the smallest index is rethrown.
template <class R, class F>
std::vector<R> parallel_map(std::size_t n, unsigned workers, F&& fn) {
    std::vector<R> out(n);
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    constexpr std::size_t kChunk = 16;
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::size_t err_index = n;
    std::exception_ptr err;

    auto work = [&] {
        for (;;) {
            const std::size_t begin = next.fetch_add(kChunk);
            if (begin >= n) return;
            const std::size_t end = std::min(n, begin + kChunk);
            for (std::size_t i = begin; i < end; ++i) {
                try {
                    out[i] = fn(i);
                } catch (...) {
                    std::lock_guard lock(err_mu);
                    if (i < err_index) {
                        err_index = i;
                        err = std::current_exception();
                    }
                }
            }
        }
    };
    const unsigned count = std::min<std::size_t>(workers, (n + kChunk - 1) / kChunk);
    std::vector<std::thread> pool;
    pool.reserve(count);
    for (unsigned w = 0; w < count; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
    return out;
}

}  // namespace lfbias
