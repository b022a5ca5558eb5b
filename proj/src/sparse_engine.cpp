#include "knnjoin/sparse_engine.hpp"

#include <memory>
#include <thread>

#include "knnjoin/errors.hpp"
#include "knnjoin/util.hpp"

namespace knnjoin {

SparseRunResult run_sparse_knn(const KdTree& tree, std::span<const PointId> queries,
                               std::size_t k, unsigned workers, bool duplicate_index) {
    if (workers < 1) throw UsageError("sparse engine needs at least one worker");

    SparseRunResult out;
    out.neighbors.resize(queries.size());
    unsigned used = unsigned(std::min<std::size_t>(workers, std::max<std::size_t>(queries.size(), 1)));
    out.worker_query_counts.assign(used, 0);
    for (std::size_t i = 0; i < queries.size(); ++i) ++out.worker_query_counts[i % used];
    if (queries.empty()) return out;

    std::vector<std::unique_ptr<KdTree>> copies;
    if (duplicate_index) {
        for (unsigned w = 0; w < used; ++w)
            copies.push_back(std::make_unique<KdTree>(
                KdTree::build(tree.dataset(), tree.bucket_capacity())));
    }

    Stopwatch clock;
    auto body = [&](unsigned w) {
        const KdTree& t = duplicate_index ? *copies[w] : tree;
        for (std::size_t i = w; i < queries.size(); i += used)
            out.neighbors[i] = t.knn_query(queries[i], k);
    };
    if (used == 1) {
        body(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < used; ++w) pool.emplace_back(body, w);
        for (auto& th : pool) th.join();
    }
    out.t1_seconds = clock.seconds() / double(queries.size());
    return out;
}

}  // namespace knnjoin
