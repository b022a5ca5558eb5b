#include "knnjoin/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include "knnjoin/errors.hpp"

namespace knnjoin {

double compute_n_min(std::size_t k, std::size_t m_eff) {
    if (k < 1 || m_eff < 1) throw UsageError("compute_n_min requires k >= 1 and m >= 1");
    double m = double(m_eff);
    return double(k) * std::pow(2.0, m) * std::tgamma(m / 2.0 + 1.0) /
           std::pow(std::numbers::pi, m / 2.0);
}

double compute_n_thresh(double n_min, double gamma) {
    if (gamma < 0.0 || gamma > 1.0) throw UsageError("gamma must be in [0, 1]");
    return n_min + (10.0 * n_min - n_min) * gamma;
}

double compute_rho_model(double t1, double t2) {
    if (!(t1 > 0.0) || !(t2 > 0.0))
        throw UsageError("rho model requires positive per-query times");
    return t2 / (t1 + t2);
}

WorkPartition split_work(const GridIndex& g, std::size_t k, PartitionParams params,
                         std::span<const PointId> queries) {
    if (params.beta < 0 || params.beta > 1 || params.gamma < 0 || params.gamma > 1 ||
        params.rho < 0 || params.rho > 1)
        throw UsageError("beta, gamma, rho must all be in [0, 1]");

    WorkPartition part;
    part.params = params;
    part.n_min = compute_n_min(k, g.indexed_dims());
    part.n_thresh = compute_n_thresh(part.n_min, params.gamma);
    part.cell_population.reserve(queries.size());

    for (PointId q : queries) {
        std::uint64_t pop = g.cell_population(q);
        part.cell_population.push_back(pop);
        if (double(pop) >= part.n_thresh) {
            part.q_gpu.push_back(q);
        } else {
            part.q_cpu.push_back(q);
        }
    }

    const std::size_t cpu_floor =
        std::size_t(std::ceil(params.rho * double(queries.size())));
    if (part.q_cpu.size() < cpu_floor) {
        std::size_t need = cpu_floor - part.q_cpu.size();
        // Demote the dense queries with the least work first.
        std::vector<std::tuple<std::uint64_t, std::uint64_t, PointId>> order;
        order.reserve(part.q_gpu.size());
        for (PointId q : part.q_gpu)
            order.emplace_back(g.cell_population(q), g.point_cell_linear_id(q), q);
        std::sort(order.begin(), order.end());

        need = std::min(need, order.size());
        for (std::size_t i = 0; i < need; ++i) part.q_cpu.push_back(std::get<2>(order[i]));
        part.demoted_count = need;

        std::vector<PointId> keep;
        keep.reserve(order.size() - need);
        for (std::size_t i = need; i < order.size(); ++i) keep.push_back(std::get<2>(order[i]));
        std::sort(keep.begin(), keep.end());
        part.q_gpu = std::move(keep);
        std::sort(part.q_cpu.begin(), part.q_cpu.end());
    }
    return part;
}

}  // namespace knnjoin
