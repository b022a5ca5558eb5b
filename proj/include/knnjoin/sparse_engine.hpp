#pragma once

#include <span>
#include <vector>

#include "knnjoin/kdtree.hpp"

namespace knnjoin {

struct SparseRunResult {
    std::vector<std::vector<Neighbor>> neighbors;  // aligned with queries
    double t1_seconds = 0.0;                       // busy span / |queries|
    std::vector<std::size_t> worker_query_counts;
};

// Shared-nothing worker pool: worker w solves the queries at positions
// w, w + workers, w + 2*workers, ... of the ascending-id query list. Workers
// write disjoint result slots, so the aggregate result is identical for any
// worker count. With duplicate_index each worker builds its own copy of the
// tree (mirrors per-rank index construction; build time is excluded from t1).
SparseRunResult run_sparse_knn(const KdTree& tree, std::span<const PointId> queries,
                               std::size_t k, unsigned workers, bool duplicate_index = false);

}  // namespace knnjoin
