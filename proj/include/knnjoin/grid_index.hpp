#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "knnjoin/dataset.hpp"

namespace knnjoin {

struct Neighbor {
    PointId id;
    double dist;
};

struct CellCoord {
    std::vector<std::uint64_t> coords;  // one index per indexed dimension
    std::uint64_t linear_id;            // row-major linearization
};

struct RangeQueryStats {
    std::uint64_t cells_probed = 0;         // adjacent cells looked up in B
    std::uint64_t cells_nonempty = 0;       // of those, found non-empty
    std::uint64_t candidates_examined = 0;  // points filtered with the full distance
};

// Epsilon-grid over the first m (highest variance) dimensions, storing only
// non-empty cells. B holds the sorted linear ids of non-empty cells, G the
// (begin, end) range of each cell in the point lookup array A. Cell edge
// length equals the range-query distance, so candidates for an eps query lie
// in the 3^m adjacent cells; filtering always uses the full n-dimensional
// distance, which keeps results exact for any m <= n.
class GridIndex {
public:
    static GridIndex build(const Dataset& d, std::size_t m, double eps);

    double eps() const { return eps_; }
    std::size_t indexed_dims() const { return m_; }
    const Dataset& dataset() const { return *dataset_; }

    const std::vector<double>& mins() const { return mins_; }
    const std::vector<double>& maxs() const { return maxs_; }
    const std::vector<std::uint64_t>& cells_per_dim() const { return cells_per_dim_; }

    const std::vector<std::uint64_t>& nonempty_cell_ids() const { return cell_ids_; }  // B
    const std::vector<std::pair<std::uint64_t, std::uint64_t>>& cell_ranges() const {  // G
        return cell_ranges_;
    }
    const std::vector<PointId>& point_lookup() const { return point_lookup_; }  // A

    // Cell containing p in the indexed dimensions. Coordinates exactly on a
    // cell face go to the higher cell, clamped into the grid; points outside
    // the bounding box (impossible for self-join queries) clamp as well.
    CellCoord cell_of(std::span<const double> p) const;

    std::uint64_t linearize(std::span<const std::uint64_t> coords) const;
    std::vector<std::uint64_t> delinearize(std::uint64_t linear_id) const;

    // Population |C| of the cell the point was indexed into.
    std::uint64_t cell_population(PointId id) const;
    std::uint64_t point_cell_linear_id(PointId id) const;

    // A-ranges of the non-empty cells adjacent to q's cell, in walk order.
    void adjacent_ranges(PointId q, std::vector<std::pair<std::uint64_t, std::uint64_t>>& out,
                         RangeQueryStats* stats = nullptr) const;

    // All points within eps of point q (self included), by candidate
    // gathering over the adjacent-cell walk plus full-dimension filtering.
    // eps must equal the eps the grid was built with.
    std::vector<Neighbor> range_query(PointId q, double eps, RangeQueryStats* stats = nullptr) const;

private:
    double eps_ = 0.0;
    std::size_t m_ = 0;
    const Dataset* dataset_ = nullptr;
    std::vector<double> mins_, maxs_;
    std::vector<std::uint64_t> cells_per_dim_;
    std::vector<std::uint64_t> strides_;
    std::vector<std::uint64_t> cell_ids_;                               // B
    std::vector<std::pair<std::uint64_t, std::uint64_t>> cell_ranges_;  // G
    std::vector<PointId> point_lookup_;                                 // A
    std::vector<std::uint32_t> point_cell_slot_;  // per point: index into B/G
};

}  // namespace knnjoin
