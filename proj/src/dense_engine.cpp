#include "knnjoin/dense_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <thread>

#include "knnjoin/errors.hpp"
#include "knnjoin/kernels.hpp"
#include "knnjoin/util.hpp"

namespace knnjoin {

std::uint64_t GranularityPolicy::workers_per_query(std::size_t batch_size) const {
    if (count < 1) throw UsageError("granularity policy worker count must be at least 1");
    if (mode == Mode::TStatic) return count;
    if (batch_size == 0) return 1;
    return std::max<std::uint64_t>(1, count / batch_size);
}

std::size_t compute_num_batches(std::uint64_t e, std::uint64_t buffer_size) {
    if (buffer_size < 1) throw UsageError("buffer size must be at least 1");
    return std::max<std::uint64_t>(3, ceil_div(e, buffer_size));
}

namespace {

std::vector<std::pair<std::size_t, std::size_t>> near_equal_slices(std::size_t n,
                                                                   std::size_t parts) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(parts);
    std::size_t base = parts ? n / parts : 0, rem = parts ? n % parts : 0, at = 0;
    for (std::size_t b = 0; b < parts; ++b) {
        std::size_t len = base + (b < rem ? 1 : 0);
        out.emplace_back(at, at + len);
        at += len;
    }
    return out;
}

}  // namespace

BatchPlan estimate_batches(const GridIndex& g, std::span<const PointId> q_gpu,
                           double sample_fraction, std::uint64_t buffer_size,
                           std::uint64_t seed) {
    if (!(sample_fraction > 0.0) || sample_fraction > 1.0)
        throw UsageError("batch sample fraction must be in (0, 1]");
    if (buffer_size < 1) throw UsageError("buffer size must be at least 1");

    BatchPlan plan;
    plan.buffer_size = buffer_size;
    if (q_gpu.empty()) return plan;  // dense engine skipped

    std::uint64_t want = std::uint64_t(std::floor(sample_fraction * double(q_gpu.size())));
    want = std::min<std::uint64_t>(std::max<std::uint64_t>(want, 100), q_gpu.size());

    std::mt19937_64 rng(seed);
    std::vector<std::uint64_t> sample = sample_without_replacement(q_gpu.size(), want, rng);

    std::uint64_t pairs = 0;
    for (std::uint64_t s : sample) pairs += g.range_query(q_gpu[s], g.eps()).size();

    double realized = double(sample.size()) / double(q_gpu.size());
    double e = double(pairs) / realized;
    if (sample.size() < q_gpu.size()) e = std::ceil(e * 1.25);  // sampling safety margin
    plan.estimate_e = std::uint64_t(e);
    plan.query_ranges = near_equal_slices(q_gpu.size(),
                                          compute_num_batches(plan.estimate_e, buffer_size));
    return plan;
}

BatchPlan plan_with_batches(std::span<const PointId> q_gpu, std::size_t n_batches,
                            std::uint64_t buffer_size) {
    if (n_batches < 1) throw UsageError("plan needs at least one batch");
    BatchPlan plan;
    plan.buffer_size = buffer_size;
    plan.query_ranges = near_equal_slices(q_gpu.size(), n_batches);
    return plan;
}

JoinPairBuffer execute_batch(const GridIndex& g, std::span<const PointId> q_gpu,
                             std::pair<std::size_t, std::size_t> range, double eps,
                             GranularityPolicy policy, unsigned n_threads,
                             std::uint64_t buffer_cap, std::size_t batch_index,
                             RangeQueryStats* stats) {
    if (eps != g.eps()) throw UsageError("batch eps must equal the grid cell width");
    const std::size_t batch_size = range.second - range.first;
    JoinPairBuffer buffer;
    if (batch_size == 0) return buffer;

    const std::uint64_t w = policy.workers_per_query(batch_size);
    const Dataset& d = g.dataset();
    const std::size_t dims = d.dims();
    const double limit_sq = eps * eps;

    // One result slot per (query, stripe); concatenation order is fixed, so
    // the buffer does not depend on scheduling.
    const std::size_t n_tasks = batch_size * std::size_t(w);
    std::vector<std::vector<JoinPair>> slots(n_tasks);
    std::vector<std::pair<std::uint64_t, std::uint64_t>> scratch;
    std::atomic<std::uint64_t> candidates{0};

    auto task = [&](std::size_t t, std::vector<std::pair<std::uint64_t, std::uint64_t>>& ranges) {
        const std::size_t qi = t / w;
        const std::uint64_t stripe = t % w;
        const PointId q = q_gpu[range.first + qi];
        const double* qp = d.point(q);

        ranges.clear();
        g.adjacent_ranges(q, ranges);
        std::uint64_t local_cand = 0;
        std::uint64_t idx = 0;  // candidate sequence number across all cells
        auto& out = slots[t];
        for (const auto& [begin, end] : ranges) {
            for (std::uint64_t a = begin; a < end; ++a, ++idx) {
                if (idx % w != stripe) continue;
                PointId cand = g.point_lookup()[a];
                ++local_cand;
                double sq = kernels::sq_dist_limited(qp, d.point(cand), dims, limit_sq);
                if (!std::isinf(sq)) out.push_back({q, cand, sq});
            }
        }
        candidates.fetch_add(local_cand, std::memory_order_relaxed);
    };

    if (n_threads <= 1 || n_tasks == 1) {
        for (std::size_t t = 0; t < n_tasks; ++t) task(t, scratch);
    } else {
        std::atomic<std::size_t> next{0};
        unsigned threads = unsigned(std::min<std::size_t>(n_threads, n_tasks));
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < threads; ++i) {
            pool.emplace_back([&] {
                std::vector<std::pair<std::uint64_t, std::uint64_t>> local_scratch;
                for (;;) {
                    std::size_t t = next.fetch_add(1, std::memory_order_relaxed);
                    if (t >= n_tasks) return;
                    task(t, local_scratch);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    std::size_t total = 0;
    for (const auto& s : slots) total += s.size();
    if (total > buffer_cap) {
        throw BatchOverflowError("batch " + std::to_string(batch_index) + " produced " +
                                     std::to_string(total) + " pairs, exceeding the buffer of " +
                                     std::to_string(buffer_cap),
                                 batch_index);
    }
    buffer.entries.reserve(total);
    for (auto& s : slots)
        buffer.entries.insert(buffer.entries.end(), s.begin(), s.end());
    if (stats) stats->candidates_examined += candidates.load();
    return buffer;
}

std::vector<QueryNeighbors> filter_keys(const JoinPairBuffer& buffer, std::size_t k) {
    std::vector<QueryNeighbors> out;
    const auto& entries = buffer.entries;
    std::size_t i = 0;
    while (i < entries.size()) {
        std::size_t j = i;
        const PointId q = entries[i].query;
        while (j < entries.size() && entries[j].query == q) ++j;

        QueryNeighbors qn;
        qn.id = q;
        std::vector<std::pair<double, PointId>> cands;
        cands.reserve(j - i);
        for (std::size_t e = i; e < j; ++e) {
            if (entries[e].neighbor == q) continue;  // self pair
            cands.emplace_back(entries[e].dist_sq, entries[e].neighbor);
        }
        if (cands.size() >= k) {
            if (cands.size() > k) {
                std::nth_element(cands.begin(), cands.begin() + k - 1, cands.end());
                cands.resize(k);
            }
            std::sort(cands.begin(), cands.end());
            qn.solved = true;
            qn.neighbors.reserve(k);
            for (const auto& [sq, id] : cands) qn.neighbors.push_back({id, std::sqrt(sq)});
        }
        out.push_back(std::move(qn));
        i = j;
    }
    return out;
}

namespace {

// Single-slot handoff between pipeline stages.
template <typename T>
class StageQueue {
public:
    void put(std::optional<T> v) {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return !full_; });
        item_ = std::move(v);
        full_ = true;
        cv_.notify_all();
    }
    std::optional<T> take() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return full_; });
        std::optional<T> v = std::move(item_);
        full_ = false;
        cv_.notify_all();
        return v;
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::optional<T> item_;
    bool full_ = false;
};

}  // namespace

DenseJoinResult run_dense_join(const GridIndex& g, std::span<const PointId> q_gpu, double eps,
                               std::size_t k, GranularityPolicy policy, const BatchPlan& plan,
                               unsigned n_threads) {
    DenseJoinResult result;
    result.stats.estimate_e = plan.estimate_e;
    if (q_gpu.empty() || plan.n_batches() == 0) return result;

    Stopwatch busy;
    struct KernelOut {
        std::size_t batch;
        JoinPairBuffer buffer;
    };
    struct FilterOut {
        std::vector<QueryNeighbors> filtered;
    };
    StageQueue<KernelOut> kernel_to_filter;
    StageQueue<FilterOut> filter_to_emit;
    std::exception_ptr kernel_error, filter_error;

    RangeQueryStats stats;
    std::thread kernel_stage([&] {
        try {
            for (std::size_t b = 0; b < plan.n_batches(); ++b) {
                Stopwatch t;
                JoinPairBuffer buf = execute_batch(g, q_gpu, plan.query_ranges[b], eps, policy,
                                                   n_threads, plan.buffer_size, b, &stats);
                result.stats.kernel_seconds += t.seconds();
                result.stats.batch_pair_counts.push_back(buf.entries.size());
                kernel_to_filter.put(KernelOut{b, std::move(buf)});
            }
            kernel_to_filter.put(std::nullopt);
        } catch (...) {
            kernel_error = std::current_exception();
            kernel_to_filter.put(std::nullopt);
        }
    });

    std::thread filter_stage([&] {
        try {
            while (auto in = kernel_to_filter.take()) {
                Stopwatch t;
                FilterOut out{filter_keys(in->buffer, k)};
                result.stats.filter_seconds += t.seconds();
                filter_to_emit.put(std::move(out));
            }
            filter_to_emit.put(std::nullopt);
        } catch (...) {
            filter_error = std::current_exception();
            // Drain so the kernel stage can finish.
            while (kernel_to_filter.take()) {}
            filter_to_emit.put(std::nullopt);
        }
    });

    while (auto out = filter_to_emit.take()) {
        for (auto& qn : out->filtered) {
            if (qn.solved) {
                result.solved.push_back(std::move(qn));
            } else {
                result.failed.push_back(qn.id);
            }
        }
    }
    kernel_stage.join();
    filter_stage.join();
    if (kernel_error) std::rethrow_exception(kernel_error);
    if (filter_error) std::rethrow_exception(filter_error);

    std::sort(result.failed.begin(), result.failed.end());
    result.stats.candidates_examined = stats.candidates_examined;
    if (!result.solved.empty()) {
        result.t2_seconds = busy.seconds() / double(result.solved.size());
    }
    return result;
}

std::vector<std::uint64_t> brute_force_join_counts(const Dataset& d, double eps,
                                                   unsigned n_threads) {
    std::vector<std::uint64_t> counts(d.size(), 0);
    const std::size_t dims = d.dims();
    const double limit_sq = eps * eps;
    parallel_for(d.size(), n_threads, [&](std::size_t q) {
        const double* qp = d.point(PointId(q));
        std::uint64_t c = 0;
        for (std::size_t t = 0; t < d.size(); ++t) {
            double sq = kernels::sq_dist(qp, d.point(PointId(t)), dims);
            if (sq <= limit_sq) ++c;
        }
        counts[q] = c;
    });
    return counts;
}

std::vector<std::vector<Neighbor>> brute_force_knn(const Dataset& d,
                                                   std::span<const PointId> queries,
                                                   std::size_t k, unsigned n_threads) {
    std::vector<std::vector<Neighbor>> out(queries.size());
    const std::size_t dims = d.dims();
    const std::size_t want = std::min<std::size_t>(k, d.size() - 1);
    parallel_for(queries.size(), n_threads, [&](std::size_t qi) {
        const PointId q = queries[qi];
        const double* qp = d.point(q);
        std::vector<std::pair<double, PointId>> all;
        all.reserve(d.size() - 1);
        for (std::size_t t = 0; t < d.size(); ++t) {
            if (PointId(t) == q) continue;
            all.emplace_back(kernels::sq_dist(qp, d.point(PointId(t)), dims), PointId(t));
        }
        if (all.size() > want) {
            std::nth_element(all.begin(), all.begin() + want - 1, all.end());
            all.resize(want);
        }
        std::sort(all.begin(), all.end());
        out[qi].reserve(all.size());
        for (const auto& [sq, id] : all) out[qi].push_back({id, std::sqrt(sq)});
    });
    return out;
}

}  // namespace knnjoin
