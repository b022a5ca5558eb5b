#include "knnjoin/grid_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "knnjoin/errors.hpp"
#include "knnjoin/kernels.hpp"

namespace knnjoin {

GridIndex GridIndex::build(const Dataset& d, std::size_t m, double eps) {
    if (!(eps > 0.0)) throw UsageError("grid eps must be positive");
    if (m < 1 || m > d.dims()) throw UsageError("grid m must satisfy 1 <= m <= n");

    GridIndex g;
    g.eps_ = eps;
    g.m_ = m;
    g.dataset_ = &d;
    g.mins_.assign(m, std::numeric_limits<double>::infinity());
    g.maxs_.assign(m, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double* p = d.point(PointId(i));
        for (std::size_t j = 0; j < m; ++j) {
            g.mins_[j] = std::min(g.mins_[j], p[j]);
            g.maxs_[j] = std::max(g.maxs_[j], p[j]);
        }
    }

    g.cells_per_dim_.resize(m);
    unsigned __int128 total = 1;
    for (std::size_t j = 0; j < m; ++j) {
        double extent = (g.maxs_[j] - g.mins_[j]) / eps;
        if (!(extent < 9.2e18)) {  // would not fit the 64-bit linear id
            throw IndexingError("grid extent overflows linear cell ids: dimension " +
                                std::to_string(j) + " requires about " +
                                std::to_string(extent) + " cells of width " +
                                std::to_string(eps));
        }
        g.cells_per_dim_[j] = std::max<std::uint64_t>(1, std::uint64_t(std::floor(extent)) + 1);
        total *= g.cells_per_dim_[j];
        if (total > std::numeric_limits<std::uint64_t>::max()) {
            std::string req;
            for (std::size_t t = 0; t <= j; ++t)
                req += (t ? "x" : "") + std::to_string(g.cells_per_dim_[t]);
            throw IndexingError("grid extent overflows linear cell ids: required extent " + req +
                                " exceeds 64-bit range");
        }
    }
    g.strides_.resize(m);
    g.strides_[m - 1] = 1;
    for (std::size_t j = m - 1; j-- > 0;) g.strides_[j] = g.strides_[j + 1] * g.cells_per_dim_[j + 1];

    // Group points by linear cell id; sort keeps the build deterministic.
    std::vector<std::pair<std::uint64_t, PointId>> keyed(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        CellCoord c = g.cell_of(d.point_span(PointId(i)));
        keyed[i] = {c.linear_id, PointId(i)};
    }
    std::sort(keyed.begin(), keyed.end());

    g.point_lookup_.resize(d.size());
    g.point_cell_slot_.resize(d.size());
    for (std::size_t i = 0; i < keyed.size(); ++i) {
        if (i == 0 || keyed[i].first != keyed[i - 1].first) {
            g.cell_ids_.push_back(keyed[i].first);
            g.cell_ranges_.emplace_back(i, i);
        }
        g.cell_ranges_.back().second = i + 1;
        g.point_lookup_[i] = keyed[i].second;
        g.point_cell_slot_[keyed[i].second] = std::uint32_t(g.cell_ids_.size() - 1);
    }
    return g;
}

CellCoord GridIndex::cell_of(std::span<const double> p) const {
    CellCoord c;
    c.coords.resize(m_);
    for (std::size_t j = 0; j < m_; ++j) {
        double rel = (p[j] - mins_[j]) / eps_;
        if (rel < 0.0) rel = 0.0;
        std::uint64_t idx = std::uint64_t(std::floor(rel));
        c.coords[j] = std::min(idx, cells_per_dim_[j] - 1);
    }
    c.linear_id = linearize(c.coords);
    return c;
}

std::uint64_t GridIndex::linearize(std::span<const std::uint64_t> coords) const {
    std::uint64_t id = 0;
    for (std::size_t j = 0; j < m_; ++j) id += coords[j] * strides_[j];
    return id;
}

std::vector<std::uint64_t> GridIndex::delinearize(std::uint64_t linear_id) const {
    std::vector<std::uint64_t> coords(m_);
    for (std::size_t j = 0; j < m_; ++j) {
        coords[j] = linear_id / strides_[j];
        linear_id %= strides_[j];
    }
    return coords;
}

std::uint64_t GridIndex::cell_population(PointId id) const {
    const auto& r = cell_ranges_[point_cell_slot_[id]];
    return r.second - r.first;
}

std::uint64_t GridIndex::point_cell_linear_id(PointId id) const {
    return cell_ids_[point_cell_slot_[id]];
}

void GridIndex::adjacent_ranges(PointId q,
                                std::vector<std::pair<std::uint64_t, std::uint64_t>>& out,
                                RangeQueryStats* stats) const {
    out.clear();
    CellCoord center = cell_of(dataset_->point_span(q));

    std::vector<std::uint64_t> lo(m_), hi(m_), cur(m_);
    for (std::size_t j = 0; j < m_; ++j) {
        lo[j] = center.coords[j] > 0 ? center.coords[j] - 1 : 0;
        hi[j] = std::min(center.coords[j] + 1, cells_per_dim_[j] - 1);
        cur[j] = lo[j];
    }

    // Odometer over the clamped +/-1 neighborhood, ascending per dimension.
    for (;;) {
        std::uint64_t id = linearize(cur);
        if (stats) ++stats->cells_probed;
        auto it = std::lower_bound(cell_ids_.begin(), cell_ids_.end(), id);
        if (it != cell_ids_.end() && *it == id) {
            if (stats) ++stats->cells_nonempty;
            out.push_back(cell_ranges_[std::size_t(it - cell_ids_.begin())]);
        }
        std::size_t j = m_;
        for (;;) {
            if (j == 0) return;  // all combinations visited
            --j;
            if (cur[j] < hi[j]) {
                ++cur[j];
                break;
            }
            cur[j] = lo[j];
        }
    }
}

std::vector<Neighbor> GridIndex::range_query(PointId q, double eps, RangeQueryStats* stats) const {
    if (eps != eps_) throw UsageError("range_query eps must equal the grid cell width");
    const double limit_sq = eps * eps;
    const double* qp = dataset_->point(q);
    const std::size_t n = dataset_->dims();

    std::vector<Neighbor> result;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> ranges;
    adjacent_ranges(q, ranges, stats);
    for (const auto& [begin, end] : ranges) {
        for (std::uint64_t a = begin; a < end; ++a) {
            PointId t = point_lookup_[a];
            if (stats) ++stats->candidates_examined;
            double sq = kernels::sq_dist_limited(qp, dataset_->point(t), n, limit_sq);
            if (!std::isinf(sq)) result.push_back({t, std::sqrt(sq)});
        }
    }
    return result;
}

}  // namespace knnjoin
