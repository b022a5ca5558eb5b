#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "knnjoin/grid_index.hpp"

namespace knnjoin {

struct PartitionParams {
    double beta = 0.0;
    double gamma = 0.0;
    double rho = 0.0;
};

// Disjoint split of the query points between the dense (grid) engine and the
// sparse (kd-tree) engine, with the per-point cell populations that drove it.
struct WorkPartition {
    std::vector<PointId> q_gpu;  // dense engine, ascending ids
    std::vector<PointId> q_cpu;  // sparse engine, ascending ids
    std::vector<std::uint64_t> cell_population;  // aligned with the queries argument
    PartitionParams params;
    double n_min = 0.0;
    double n_thresh = 0.0;
    std::size_t demoted_count = 0;  // moved dense -> sparse by the rho floor
};

// Minimum cell population for a query to probabilistically find K neighbors
// within eps_beta: K times the volume ratio of the m-cube to its inscribed
// m-ball. The eps_beta terms cancel, leaving K * 2^m * Gamma(m/2+1) / pi^(m/2).
double compute_n_min(std::size_t k, std::size_t m_eff);

// n_min + (10*n_min - n_min) * gamma.
double compute_n_thresh(double n_min, double gamma);

// Load-balancing rho from measured per-query times: T2 / (T1 + T2) equalizes
// the modeled finish times of the two engines.
double compute_rho_model(double t1, double t2);

// Assigns each query to the dense engine iff its cell population reaches
// n_thresh, then demotes dense queries from the least-populated cells (ties:
// cell linear id, then point id) until |q_cpu| >= ceil(rho * |queries|).
WorkPartition split_work(const GridIndex& g, std::size_t k, PartitionParams params,
                         std::span<const PointId> queries);

}  // namespace knnjoin
