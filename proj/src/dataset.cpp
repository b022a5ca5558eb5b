#include "knnjoin/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "knnjoin/errors.hpp"
#include "knnjoin/kernels.hpp"
#include "knnjoin/distance.hpp"

namespace knnjoin {

namespace {

std::vector<std::uint32_t> identity_permutation(std::size_t n) {
    std::vector<std::uint32_t> p(n);
    std::iota(p.begin(), p.end(), 0u);
    return p;
}

void validate(const std::vector<double>& coords, std::size_t size, std::size_t dims) {
    if (size < 1) throw UsageError("dataset must contain at least one point");
    if (dims < 1) throw UsageError("dataset must have at least one dimension");
    if (coords.size() != size * dims)
        throw UsageError("coordinate buffer size does not match |D| x n");
    for (std::size_t i = 0; i < coords.size(); ++i) {
        if (!std::isfinite(coords[i])) {
            throw UsageError("non-finite coordinate at point " + std::to_string(i / dims) +
                             ", dimension " + std::to_string(i % dims));
        }
    }
}

}  // namespace

Dataset::Dataset(std::vector<double> coords, std::size_t dims)
    : Dataset(std::move(coords), dims, {}) {}

Dataset::Dataset(std::vector<double> coords, std::size_t dims,
                 std::vector<std::uint32_t> dim_permutation)
    : coords_(std::move(coords)), size_(dims == 0 ? 0 : coords_.size() / dims), dims_(dims),
      dim_permutation_(std::move(dim_permutation)) {
    validate(coords_, size_, dims_);
    if (dim_permutation_.empty()) {
        dim_permutation_ = identity_permutation(dims_);
    } else {
        if (dim_permutation_.size() != dims_)
            throw UsageError("dim permutation size does not match dimension count");
        std::vector<bool> seen(dims_, false);
        for (auto v : dim_permutation_) {
            if (v >= dims_ || seen[v]) throw UsageError("dim permutation is not a bijection");
            seen[v] = true;
        }
    }
}

std::vector<double> Dataset::column_variances() const {
    std::vector<double> mean(dims_, 0.0), var(dims_, 0.0);
    for (std::size_t i = 0; i < size_; ++i) {
        const double* p = point(PointId(i));
        for (std::size_t j = 0; j < dims_; ++j) mean[j] += p[j];
    }
    for (std::size_t j = 0; j < dims_; ++j) mean[j] /= double(size_);
    for (std::size_t i = 0; i < size_; ++i) {
        const double* p = point(PointId(i));
        for (std::size_t j = 0; j < dims_; ++j) {
            double d = p[j] - mean[j];
            var[j] += d * d;
        }
    }
    for (std::size_t j = 0; j < dims_; ++j) var[j] /= double(size_);
    return var;
}

Dataset Dataset::with_original_column_order() const {
    // current column j holds original column dim_permutation_[j]
    std::vector<double> out(coords_.size());
    for (std::size_t i = 0; i < size_; ++i) {
        const double* src = point(PointId(i));
        double* dst = out.data() + i * dims_;
        for (std::size_t j = 0; j < dims_; ++j) dst[dim_permutation_[j]] = src[j];
    }
    return Dataset(std::move(out), dims_);
}

Dataset reorder_by_variance(const Dataset& d, std::size_t m) {
    if (m < 1 || m > d.dims())
        throw UsageError("indexed dimension count m must satisfy 1 <= m <= n");

    std::vector<double> var = d.column_variances();
    std::vector<std::uint32_t> order(d.dims());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (var[a] != var[b]) return var[a] > var[b];
        return a < b;
    });

    const std::size_t n = d.dims();
    std::vector<double> out(d.raw().size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double* src = d.point(PointId(i));
        double* dst = out.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) dst[j] = src[order[j]];
    }

    // Compose with any permutation already recorded on the input.
    std::vector<std::uint32_t> perm(n);
    for (std::size_t j = 0; j < n; ++j) perm[j] = d.dim_permutation()[order[j]];
    return Dataset(std::move(out), n, std::move(perm));
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw UsageError("euclidean_distance: dimension mismatch (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
    return std::sqrt(kernels::sq_dist(a.data(), b.data(), a.size()));
}

DistanceOutcome short_circuit_distance(std::span<const double> a, std::span<const double> b,
                                       double eps) {
    if (a.size() != b.size()) throw UsageError("short_circuit_distance: dimension mismatch");
    if (!(eps > 0.0)) throw UsageError("short_circuit_distance: eps must be positive");
    double sq = kernels::sq_dist_limited(a.data(), b.data(), a.size(), eps * eps);
    if (std::isinf(sq)) return {DistanceKind::Exceeded, 0.0, eps};
    return {DistanceKind::Within, std::sqrt(sq), eps};
}

}  // namespace knnjoin
