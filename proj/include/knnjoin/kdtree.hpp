#pragma once

#include <cstdint>
#include <vector>

#include "knnjoin/dataset.hpp"
#include "knnjoin/grid_index.hpp"  // Neighbor

namespace knnjoin {

// Exact KNN over all n dimensions: median index splits on the widest-spread
// dimension, tight per-node bounding boxes, branch-and-bound search pruned by
// the current Kth-best squared distance. Immutable after build.
class KdTree {
public:
    struct Node {
        std::uint32_t left = 0;   // 0 = leaf (root is never a child)
        std::uint32_t right = 0;
        std::uint32_t begin = 0;  // leaf range into ids()
        std::uint32_t end = 0;
        std::uint32_t split_dim = 0;
        double split_val = 0.0;
        bool leaf() const { return left == 0; }
    };

    static KdTree build(const Dataset& d, std::size_t bucket_capacity = 16);

    // The exact K nearest neighbors of point q, excluding q itself, sorted by
    // (distance, id); shorter than k only when fewer than k other points exist.
    std::vector<Neighbor> knn_query(PointId q, std::size_t k) const;

    const Dataset& dataset() const { return *dataset_; }
    std::size_t bucket_capacity() const { return bucket_capacity_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<PointId>& ids() const { return ids_; }
    std::size_t leaf_count() const;
    std::size_t depth() const;

private:
    const Dataset* dataset_ = nullptr;
    std::size_t bucket_capacity_ = 16;
    std::vector<Node> nodes_;
    std::vector<PointId> ids_;
    std::vector<double> box_min_, box_max_;  // dims() doubles per node

    std::uint32_t build_node(std::uint32_t begin, std::uint32_t end, std::size_t bucket_capacity);
    double box_sq_dist(std::uint32_t node, const double* p) const;
};

}  // namespace knnjoin
