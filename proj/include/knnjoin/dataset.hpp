#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace knnjoin {

using PointId = std::uint32_t;

// Immutable row-major point store. dim_permutation() records which original
// column each current column came from (identity when no reorder was
// applied), so column order can be undone bit-exactly.
class Dataset {
public:
    Dataset(std::vector<double> coords, std::size_t dims);
    Dataset(std::vector<double> coords, std::size_t dims, std::vector<std::uint32_t> dim_permutation);

    std::size_t size() const { return size_; }
    std::size_t dims() const { return dims_; }

    const double* point(PointId id) const { return coords_.data() + std::size_t(id) * dims_; }
    std::span<const double> point_span(PointId id) const { return {point(id), dims_}; }
    double coord(PointId id, std::size_t dim) const { return coords_[std::size_t(id) * dims_ + dim]; }

    const std::vector<double>& raw() const { return coords_; }
    const std::vector<std::uint32_t>& dim_permutation() const { return dim_permutation_; }

    // Population variance per column (divide by |D|).
    std::vector<double> column_variances() const;

    // Copy with columns restored to the original order.
    Dataset with_original_column_order() const;

private:
    std::vector<double> coords_;
    std::size_t size_;
    std::size_t dims_;
    std::vector<std::uint32_t> dim_permutation_;
};

// Permutes columns so they are in descending variance order (ties broken by
// lower original index); the first m columns are then the m highest-variance
// dimensions. The full sort makes the permutation independent of m.
Dataset reorder_by_variance(const Dataset& d, std::size_t m);

}  // namespace knnjoin
