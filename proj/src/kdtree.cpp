#include "knnjoin/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "knnjoin/errors.hpp"
#include "knnjoin/kernels.hpp"

namespace knnjoin {

namespace {

// Worst-first ordering on (squared distance, id): the heap top is the
// candidate to beat. The id tiebreak makes selection canonical.
struct HeapEntry {
    double sq;
    PointId id;
    bool operator<(const HeapEntry& o) const {
        if (sq != o.sq) return sq < o.sq;
        return id < o.id;
    }
};

}  // namespace

KdTree KdTree::build(const Dataset& d, std::size_t bucket_capacity) {
    if (bucket_capacity < 1) throw UsageError("kd-tree bucket capacity must be at least 1");
    KdTree t;
    t.dataset_ = &d;
    t.bucket_capacity_ = bucket_capacity;
    t.ids_.resize(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) t.ids_[i] = PointId(i);
    t.nodes_.reserve(2 * (d.size() / bucket_capacity + 1));
    t.build_node(0, std::uint32_t(d.size()), bucket_capacity);
    return t;
}

std::uint32_t KdTree::build_node(std::uint32_t begin, std::uint32_t end,
                                 std::size_t bucket_capacity) {
    const std::size_t n = dataset_->dims();
    std::uint32_t me = std::uint32_t(nodes_.size());
    nodes_.emplace_back();
    box_min_.resize(box_min_.size() + n, std::numeric_limits<double>::infinity());
    box_max_.resize(box_max_.size() + n, -std::numeric_limits<double>::infinity());

    double* bmin = box_min_.data() + std::size_t(me) * n;
    double* bmax = box_max_.data() + std::size_t(me) * n;
    for (std::uint32_t i = begin; i < end; ++i) {
        const double* p = dataset_->point(ids_[i]);
        for (std::size_t j = 0; j < n; ++j) {
            bmin[j] = std::min(bmin[j], p[j]);
            bmax[j] = std::max(bmax[j], p[j]);
        }
    }

    if (end - begin <= bucket_capacity) {
        nodes_[me].begin = begin;
        nodes_[me].end = end;
        return me;
    }

    // Widest spread dimension, ties to the lower index.
    std::size_t dim = 0;
    double best = -1.0;
    for (std::size_t j = 0; j < n; ++j) {
        double w = bmax[j] - bmin[j];
        if (w > best) {
            best = w;
            dim = j;
        }
    }

    std::uint32_t mid = begin + (end - begin) / 2;
    // (coordinate, id) keys are unique, so the partition does not depend on
    // nth_element internals.
    std::nth_element(ids_.begin() + begin, ids_.begin() + mid, ids_.begin() + end,
                     [&](PointId a, PointId b) {
                         double ca = dataset_->coord(a, dim), cb = dataset_->coord(b, dim);
                         if (ca != cb) return ca < cb;
                         return a < b;
                     });
    double split_val = dataset_->coord(ids_[mid], dim);

    std::uint32_t left = build_node(begin, mid, bucket_capacity);
    std::uint32_t right = build_node(mid, end, bucket_capacity);
    nodes_[me].left = left;
    nodes_[me].right = right;
    nodes_[me].split_dim = std::uint32_t(dim);
    nodes_[me].split_val = split_val;
    return me;
}

double KdTree::box_sq_dist(std::uint32_t node, const double* p) const {
    const std::size_t n = dataset_->dims();
    const double* bmin = box_min_.data() + std::size_t(node) * n;
    const double* bmax = box_max_.data() + std::size_t(node) * n;
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double d = 0.0;
        if (p[j] < bmin[j]) d = bmin[j] - p[j];
        else if (p[j] > bmax[j]) d = p[j] - bmax[j];
        sum += d * d;
    }
    return sum;
}

std::vector<Neighbor> KdTree::knn_query(PointId q, std::size_t k) const {
    if (k < 1) throw UsageError("knn_query requires k >= 1");
    const std::size_t n = dataset_->dims();
    const double* qp = dataset_->point(q);
    const std::size_t want = std::min<std::size_t>(k, dataset_->size() - 1);

    std::priority_queue<HeapEntry> heap;  // top = current worst of the best
    auto bound = [&] {
        return heap.size() < want ? std::numeric_limits<double>::infinity() : heap.top().sq;
    };

    auto visit = [&](auto&& self, std::uint32_t node) -> void {
        const Node& nd = nodes_[node];
        if (nd.leaf()) {
            for (std::uint32_t i = nd.begin; i < nd.end; ++i) {
                PointId t = ids_[i];
                if (t == q) continue;
                double sq = kernels::sq_dist_limited(qp, dataset_->point(t), n, bound());
                if (std::isinf(sq)) continue;
                HeapEntry e{sq, t};
                if (heap.size() < want) {
                    heap.push(e);
                } else if (e < heap.top()) {
                    heap.pop();
                    heap.push(e);
                }
            }
            return;
        }
        double dl = box_sq_dist(nd.left, qp);
        double dr = box_sq_dist(nd.right, qp);
        std::uint32_t first = nd.left, second = nd.right;
        double dfirst = dl, dsecond = dr;
        if (dr < dl) {
            std::swap(first, second);
            std::swap(dfirst, dsecond);
        }
        // Visit on equality too: an equal-distance point with a smaller id
        // may still displace the current Kth.
        if (dfirst <= bound()) self(self, first);
        if (dsecond <= bound()) self(self, second);
    };
    if (want > 0) visit(visit, 0);

    std::vector<Neighbor> out(heap.size());
    for (std::size_t i = heap.size(); i-- > 0;) {
        out[i] = {heap.top().id, std::sqrt(heap.top().sq)};
        heap.pop();
    }
    return out;
}

std::size_t KdTree::leaf_count() const {
    std::size_t c = 0;
    for (const auto& nd : nodes_)
        if (nd.leaf()) ++c;
    return c;
}

std::size_t KdTree::depth() const {
    // Iterative depth over the implicit child links.
    std::size_t best = 0;
    std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 1}};
    while (!stack.empty()) {
        auto [node, depth] = stack.back();
        stack.pop_back();
        best = std::max(best, depth);
        if (!nodes_[node].leaf()) {
            stack.push_back({nodes_[node].left, depth + 1});
            stack.push_back({nodes_[node].right, depth + 1});
        }
    }
    return best;
}

}  // namespace knnjoin
