#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "knnjoin/grid_index.hpp"

namespace knnjoin {

// Work chunking for one query's candidate scan: a fixed number of workers
// per query, or a total worker budget divided evenly over the batch.
struct GranularityPolicy {
    enum class Mode { TStatic, TDynamic };
    Mode mode = Mode::TStatic;
    std::uint64_t count = 8;  // workers per point, or minimum total workers

    static GranularityPolicy tstatic(std::uint64_t threads_per_point) {
        return {Mode::TStatic, threads_per_point};
    }
    static GranularityPolicy tdynamic(std::uint64_t min_total_threads) {
        return {Mode::TDynamic, min_total_threads};
    }
    std::uint64_t workers_per_query(std::size_t batch_size) const;
};

struct BatchPlan {
    std::uint64_t estimate_e = 0;    // estimated total result pairs (self included)
    std::uint64_t buffer_size = 0;   // per-batch result capacity b_s
    std::vector<std::pair<std::size_t, std::size_t>> query_ranges;  // slices of q_gpu

    std::size_t n_batches() const { return query_ranges.size(); }
};

// max(3, ceil(e / buffer_size)); the floor of three keeps the pipeline full.
std::size_t compute_num_batches(std::uint64_t e, std::uint64_t buffer_size);

// Pre-joins a seeded sample of q_gpu (fraction floored at 100 queries) to
// extrapolate the total pair count, then slices q_gpu into near-equal
// contiguous batches. A 25% safety margin is added to sampled estimates;
// sample_fraction = 1 keeps the exact count. Empty q_gpu yields a plan with
// zero batches.
BatchPlan estimate_batches(const GridIndex& g, std::span<const PointId> q_gpu,
                           double sample_fraction, std::uint64_t buffer_size,
                           std::uint64_t seed);

// Fixed batch count, near-equal slices; used by tests and sweeps to pin n_b.
BatchPlan plan_with_batches(std::span<const PointId> q_gpu, std::size_t n_batches,
                            std::uint64_t buffer_size);

// One batch's key/value output: (query id, neighbor id, squared distance),
// grouped by query. Squared distances keep the canonical (distance, id)
// selection exact; the square root is taken once at filter time.
struct JoinPair {
    PointId query;
    PointId neighbor;
    double dist_sq;
};

struct JoinPairBuffer {
    std::vector<JoinPair> entries;
};

// Runs the batch's range queries, dividing each query's candidate scan over
// workers_per_query stripes. Striping changes only the buffer order, never
// the pair set. Throws BatchOverflowError when the buffer would exceed its
// capacity.
JoinPairBuffer execute_batch(const GridIndex& g, std::span<const PointId> q_gpu,
                             std::pair<std::size_t, std::size_t> range, double eps,
                             GranularityPolicy policy, unsigned n_threads,
                             std::uint64_t buffer_cap, std::size_t batch_index,
                             RangeQueryStats* stats = nullptr);

struct QueryNeighbors {
    PointId id;
    std::vector<Neighbor> neighbors;  // sorted (distance, id), at most k
    bool solved = false;
};

// Per query: drop the self pair, keep the k nearest by (distance, id).
// Queries with fewer than k neighbors in range are Failed and their partial
// lists discarded (they are re-solved in full by the sparse engine).
std::vector<QueryNeighbors> filter_keys(const JoinPairBuffer& buffer, std::size_t k);

struct DenseJoinStats {
    std::uint64_t estimate_e = 0;
    std::vector<std::uint64_t> batch_pair_counts;
    std::uint64_t candidates_examined = 0;
    double kernel_seconds = 0.0;
    double filter_seconds = 0.0;
};

struct DenseJoinResult {
    std::vector<QueryNeighbors> solved;
    std::vector<PointId> failed;  // ascending
    double t2_seconds = 0.0;      // busy span / solved count (0 if none solved)
    DenseJoinStats stats;
};

// Drives all batches through a three-stage pipeline (kernel, filter, emit)
// with one batch in flight per stage, so batch b+1's kernel overlaps batch
// b's filtering.
DenseJoinResult run_dense_join(const GridIndex& g, std::span<const PointId> q_gpu, double eps,
                               std::size_t k, GranularityPolicy policy, const BatchPlan& plan,
                               unsigned n_threads);

// Linear all-pairs joins used as the oracle engine: counts of points within
// eps per query (self included), and full exact KNN by sorting every
// distance. Both scan every pair regardless of eps.
std::vector<std::uint64_t> brute_force_join_counts(const Dataset& d, double eps,
                                                   unsigned n_threads);
std::vector<std::vector<Neighbor>> brute_force_knn(const Dataset& d,
                                                   std::span<const PointId> queries,
                                                   std::size_t k, unsigned n_threads);

}  // namespace knnjoin
