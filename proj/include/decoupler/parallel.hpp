// parallel.hpp - index-addressed data-parallel loops with ordered reduction

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace decoupler {

// Runs body(i) for i in [0, count) on up to `threads` workers. Work is split
// into contiguous blocks; body must only write to slot i of its outputs.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body)
{
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const std::size_t block = (count + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
        const std::size_t lo = w * block;
        const std::size_t hi = std::min(count, lo + block);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

template <std::size_t K>
struct EnsembleMoments {
    std::array<double, K> mean{};
    std::array<double, K> std_error{};
    std::size_t count = 0;
};

// Evaluates sample(i) -> std::array<double, K> for every trajectory index,
// stores the results by index, then reduces sequentially in index order so
// the result does not depend on the thread count.
template <std::size_t K, class Sample>
EnsembleMoments<K> ensemble_moments(std::size_t count, unsigned threads, Sample&& sample)
{
    std::vector<std::array<double, K>> slots(count);
    parallel_for(count, threads, [&](std::size_t i) { slots[i] = sample(i); });

    EnsembleMoments<K> out;
    out.count = count;
    std::array<double, K> sum{};
    for (const auto& s : slots)
        for (std::size_t k = 0; k < K; ++k) sum[k] += s[k];
    for (std::size_t k = 0; k < K; ++k) out.mean[k] = count ? sum[k] / static_cast<double>(count) : 0.0;
    if (count > 1) {
        std::array<double, K> ss{};
        for (const auto& s : slots)
            for (std::size_t k = 0; k < K; ++k) {
                const double d = s[k] - out.mean[k];
                ss[k] += d * d;
            }
        const double n = static_cast<double>(count);
        for (std::size_t k = 0; k < K; ++k) out.std_error[k] = std::sqrt(ss[k] / (n - 1.0) / n);
    }
    return out;
}

} // namespace decoupler
