#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <random>
#include <thread>
#include <unordered_map>
#include <vector>

namespace knnjoin {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Independent seed per named sub-stream of a run seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_tag) {
    return splitmix64(master ^ splitmix64(stream_tag));
}

inline constexpr std::uint64_t kSeedEpsMean = 0x01;
inline constexpr std::uint64_t kSeedHistogram = 0x02;
inline constexpr std::uint64_t kSeedBatchEstimate = 0x03;
inline constexpr std::uint64_t kSeedQuerySubset = 0x04;

template <typename T>
constexpr T ceil_div(T a, T b) {
    return (a + b - 1) / b;
}

inline unsigned default_worker_count() {
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

// Runs fn(task) for task in [0, n_tasks) on up to n_threads threads.
// Callers make tasks write to disjoint slots so results do not depend on
// scheduling order.
inline void parallel_for(std::size_t n_tasks, unsigned n_threads,
                         const std::function<void(std::size_t)>& fn) {
    if (n_tasks == 0) return;
    unsigned threads = std::min<std::size_t>(std::max(1u, n_threads), n_tasks);
    if (threads == 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= n_tasks) return;
                fn(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

// k distinct values from [0, n), ascending. Partial Fisher-Yates over an
// index map keeps it O(k) in memory for small k.
inline std::vector<std::uint64_t> sample_without_replacement(std::uint64_t n, std::uint64_t k,
                                                             std::mt19937_64& rng) {
    if (k >= n) {
        std::vector<std::uint64_t> all(n);
        for (std::uint64_t i = 0; i < n; ++i) all[i] = i;
        return all;
    }
    std::vector<std::uint64_t> picked;
    picked.reserve(k);
    std::unordered_map<std::uint64_t, std::uint64_t> remap;
    for (std::uint64_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::uint64_t> dist(i, n - 1);
        std::uint64_t j = dist(rng);
        auto ji = remap.find(j);
        std::uint64_t jv = ji == remap.end() ? j : ji->second;
        auto ii = remap.find(i);
        std::uint64_t iv = ii == remap.end() ? i : ii->second;
        picked.push_back(jv);
        remap[j] = iv;
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace knnjoin
