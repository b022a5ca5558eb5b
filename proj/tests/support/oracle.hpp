// Test-only quadratic oracles. Distances here use a plain naive loop on
// purpose: they stay independent of the kernel dispatch the library routes
// through.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "knnjoin/dataset.hpp"
#include "knnjoin/grid_index.hpp"

namespace testsupport {

inline double naive_sq_dist(const double* a, const double* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

inline double naive_dist(const knnjoin::Dataset& d, knnjoin::PointId a, knnjoin::PointId b) {
    return std::sqrt(naive_sq_dist(d.point(a), d.point(b), d.dims()));
}

// All points within eps of q, self included, sorted by id.
inline std::vector<knnjoin::Neighbor> brute_range(const knnjoin::Dataset& d, knnjoin::PointId q,
                                                  double eps) {
    std::vector<knnjoin::Neighbor> out;
    for (std::size_t t = 0; t < d.size(); ++t) {
        double dist = naive_dist(d, q, knnjoin::PointId(t));
        if (dist <= eps) out.push_back({knnjoin::PointId(t), dist});
    }
    return out;
}

// Exact KNN of q (self excluded) under the canonical (distance, id) order.
inline std::vector<knnjoin::Neighbor> brute_knn(const knnjoin::Dataset& d, knnjoin::PointId q,
                                                std::size_t k) {
    std::vector<std::pair<double, knnjoin::PointId>> all;
    for (std::size_t t = 0; t < d.size(); ++t) {
        if (knnjoin::PointId(t) == q) continue;
        all.emplace_back(naive_sq_dist(d.point(q), d.point(knnjoin::PointId(t)), d.dims()),
                         knnjoin::PointId(t));
    }
    std::sort(all.begin(), all.end());
    if (all.size() > k) all.resize(k);
    std::vector<knnjoin::Neighbor> out;
    out.reserve(all.size());
    for (const auto& [sq, id] : all) out.push_back({id, std::sqrt(sq)});
    return out;
}

inline knnjoin::Dataset random_dataset(std::size_t size, std::size_t dims, std::uint64_t seed,
                                       double lo = 0.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> coords(size * dims);
    for (auto& v : coords) v = dist(rng);
    return knnjoin::Dataset(std::move(coords), dims);
}

inline bool same_neighbors(const std::vector<knnjoin::Neighbor>& a,
                           const std::vector<knnjoin::Neighbor>& b, double dist_tol = 1e-12) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].id != b[i].id) return false;
        if (std::abs(a[i].dist - b[i].dist) > dist_tol * std::max(1.0, std::abs(b[i].dist)))
            return false;
    }
    return true;
}

inline std::vector<knnjoin::Neighbor> sorted_by_id(std::vector<knnjoin::Neighbor> v) {
    std::sort(v.begin(), v.end(),
              [](const knnjoin::Neighbor& a, const knnjoin::Neighbor& b) { return a.id < b.id; });
    return v;
}

}  // namespace testsupport
