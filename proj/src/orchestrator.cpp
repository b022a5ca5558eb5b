#include "knnjoin/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>

#include "knnjoin/errors.hpp"
#include "knnjoin/sparse_engine.hpp"
#include "knnjoin/util.hpp"

namespace knnjoin {

namespace {

void validate_config(const Dataset& d, const RunConfig& cfg) {
    if (cfg.k < 1) throw UsageError("k must be at least 1");
    if (cfg.m > d.dims()) throw UsageError("m must satisfy m <= n");
    if (cfg.beta < 0 || cfg.beta > 1 || cfg.gamma < 0 || cfg.gamma > 1 || cfg.rho < 0 ||
        cfg.rho > 1)
        throw UsageError("beta, gamma, rho must all be in [0, 1]");
    if (!(cfg.hist_query_fraction > 0) || cfg.hist_query_fraction > 1 ||
        !(cfg.batch_sample_fraction > 0) || cfg.batch_sample_fraction > 1)
        throw UsageError("sample fractions must be in (0, 1]");
    if (cfg.buffer_size < 1) throw UsageError("buffer size must be at least 1");
    if (cfg.n_bins < 2) throw UsageError("n_bins must be at least 2");
    if (cfg.query_subset) {
        for (PointId q : *cfg.query_subset)
            if (q >= d.size()) throw UsageError("query subset id out of range");
    }
}

std::vector<PointId> make_query_list(const Dataset& d, const RunConfig& cfg) {
    std::vector<PointId> queries;
    if (cfg.query_subset) {
        queries = *cfg.query_subset;
        std::sort(queries.begin(), queries.end());
        queries.erase(std::unique(queries.begin(), queries.end()), queries.end());
    } else {
        queries.resize(d.size());
        std::iota(queries.begin(), queries.end(), PointId(0));
    }
    return queries;
}

// Selection with the beta target clamped to the histogram's reach: when even
// the last bin cannot supply the requested cumulative neighbor count, fall
// back to the bin where the cumulative average peaks.
EpsSelection select_with_fallback(const EpsilonProfile& profile, std::size_t k, double beta,
                                  bool& fell_back) {
    try {
        return select_eps_beta(profile, k, beta);
    } catch (const TargetUnreachableError&) {
        fell_back = true;
        const auto& cum = profile.cumulative;
        auto it = std::lower_bound(cum.begin(), cum.end(), cum.back());
        std::size_t bin = std::size_t(it - cum.begin()) + 1;
        double start = double(bin - 1) * profile.bin_width;
        double end = double(bin) * profile.bin_width;
        double eps_beta = (start + end) / 2.0;
        return {eps_beta, 2.0 * eps_beta, bin};
    }
}

}  // namespace

KnnRunResult run_hybrid(const Dataset& d, const RunConfig& cfg) {
    validate_config(d, cfg);

    KnnRunResult result;
    result.mode = cfg.mode;
    result.queries = make_query_list(d, cfg);
    const std::size_t n_queries = result.queries.size();
    result.neighbors.resize(n_queries);
    result.provenance.assign(n_queries, Provenance::Sparse);

    std::size_t k_eff = cfg.k;
    if (k_eff >= d.size()) {
        k_eff = d.size() - 1;
        result.warnings.push_back("k clamped to |D|-1 = " + std::to_string(k_eff));
    }
    result.k_effective = k_eff;

    const std::size_t m = cfg.m == 0 ? std::min<std::size_t>(6, d.dims()) : cfg.m;
    result.m_used = m;
    const unsigned workers = cfg.workers == 0 ? default_worker_count() : cfg.workers;

    // Variance reorder runs in every mode so all engines accumulate distance
    // terms in the same column order.
    Stopwatch reorder_clock;
    auto working = std::make_shared<Dataset>(reorder_by_variance(d, m));
    result.timings.reorder = reorder_clock.seconds();
    result.working = working;

    if (k_eff == 0) {
        result.timings.measured_total = result.timings.reorder;
        return result;  // single point: every neighbor list is empty
    }

    // Position of each query id in the result arrays.
    std::vector<std::uint32_t> slot_of(d.size(), std::uint32_t(-1));
    for (std::size_t i = 0; i < n_queries; ++i) slot_of[result.queries[i]] = std::uint32_t(i);

    if (cfg.mode == EngineMode::BruteOracle) {
        Stopwatch clock;
        auto knn = brute_force_knn(*working, result.queries, k_eff, workers);
        for (std::size_t i = 0; i < n_queries; ++i) result.neighbors[i] = std::move(knn[i]);
        std::fill(result.provenance.begin(), result.provenance.end(), Provenance::Dense);
        result.timings.dense = clock.seconds();
        result.timings.measured_total = result.timings.reorder + result.timings.dense;
        return result;
    }

    if (cfg.mode == EngineMode::SparseOnly) {
        Stopwatch build_clock;
        KdTree tree = KdTree::build(*working, cfg.kd_bucket_capacity);
        result.timings.kd_build = build_clock.seconds();

        Stopwatch clock;
        SparseRunResult sparse =
            run_sparse_knn(tree, result.queries, k_eff, workers, cfg.duplicate_kd_index);
        result.timings.sparse = clock.seconds();
        for (std::size_t i = 0; i < n_queries; ++i)
            result.neighbors[i] = std::move(sparse.neighbors[i]);
        result.t1 = sparse.t1_seconds;
        result.sparse_worker_counts = sparse.worker_query_counts;
        result.timings.measured_total = result.timings.reorder + result.timings.sparse;
        return result;
    }

    // Hybrid / DenseOnly: epsilon selection feeds the grid and the split.
    Stopwatch eps_clock;
    const std::uint64_t pair_budget =
        std::min<std::uint64_t>(10 * std::uint64_t(d.size()), cfg.eps_mean_pair_cap);
    double eps_mean =
        estimate_eps_mean(*working, pair_budget, derive_seed(cfg.seed, kSeedEpsMean));
    EpsilonProfile profile =
        build_distance_histogram(*working, eps_mean, cfg.n_bins, cfg.hist_query_fraction,
                                 derive_seed(cfg.seed, kSeedHistogram), workers);
    bool fell_back = false;
    EpsSelection sel = select_with_fallback(profile, k_eff, cfg.beta, fell_back);
    bool default_fell_back = false;
    EpsSelection def = select_with_fallback(profile, k_eff, 0.0, default_fell_back);
    profile.eps_default = def.eps_beta;
    profile.beta = cfg.beta;
    profile.eps_beta = sel.eps_beta;
    profile.eps_final = sel.eps_final;
    result.timings.eps_select = eps_clock.seconds();
    result.eps_fallback = fell_back;
    if (fell_back)
        result.warnings.push_back("beta target unreachable within eps_mean; "
                                  "clamped to the histogram maximum");
    result.profile = profile;
    const double eps = sel.eps_final;
    result.eps_used = eps;

    Stopwatch grid_clock;
    GridIndex grid = GridIndex::build(*working, m, eps);
    result.timings.grid_build = grid_clock.seconds();

    Stopwatch split_clock;
    WorkPartition part;
    if (cfg.mode == EngineMode::DenseOnly) {
        // Every query goes to the dense engine; failures still re-solve on
        // the sparse path so the output stays exact.
        part.params = {cfg.beta, cfg.gamma, cfg.rho};
        part.n_min = compute_n_min(k_eff, m);
        part.n_thresh = compute_n_thresh(part.n_min, cfg.gamma);
        part.q_gpu = result.queries;
        for (PointId q : result.queries)
            part.cell_population.push_back(grid.cell_population(q));
    } else {
        part = split_work(grid, k_eff, {cfg.beta, cfg.gamma, cfg.rho}, result.queries);
    }
    result.timings.split = split_clock.seconds();
    result.partition = PartitionSummary{part.q_gpu.size(), part.q_cpu.size(), part.n_min,
                                        part.n_thresh, part.demoted_count};

    Stopwatch kd_clock;
    KdTree tree = KdTree::build(*working, cfg.kd_bucket_capacity);
    result.timings.kd_build = kd_clock.seconds();

    // Dense pipeline and sparse pool run concurrently after the split.
    Stopwatch engines_clock;
    auto dense_future =
        std::async(std::launch::async, [&]() -> std::pair<DenseJoinResult, double> {
            if (part.q_gpu.empty()) return {};
            Stopwatch clock;
            BatchPlan plan;
            if (cfg.force_n_batches) {
                plan = plan_with_batches(part.q_gpu, *cfg.force_n_batches, cfg.buffer_size);
            } else {
                plan = estimate_batches(grid, part.q_gpu, cfg.batch_sample_fraction,
                                        cfg.buffer_size, derive_seed(cfg.seed, kSeedBatchEstimate));
            }
            DenseJoinResult r = run_dense_join(grid, part.q_gpu, eps, k_eff, cfg.policy, plan,
                                               workers);
            return {std::move(r), clock.seconds()};
        });

    SparseRunResult sparse;
    Stopwatch sparse_clock;
    if (!part.q_cpu.empty())
        sparse = run_sparse_knn(tree, part.q_cpu, k_eff, workers, cfg.duplicate_kd_index);
    result.timings.sparse = sparse_clock.seconds();

    auto [dense, dense_seconds] = dense_future.get();
    result.timings.dense = dense_seconds;
    const double engines_elapsed = engines_clock.seconds();

    // The sparse engine finishes only after the dense failures it inherits
    // are processed.
    Stopwatch reassign_clock;
    SparseRunResult rescue;
    if (!dense.failed.empty())
        rescue = run_sparse_knn(tree, dense.failed, k_eff, workers, cfg.duplicate_kd_index);
    result.timings.reassign = reassign_clock.seconds();

    Stopwatch merge_clock;
    for (std::size_t i = 0; i < part.q_cpu.size(); ++i) {
        std::uint32_t slot = slot_of[part.q_cpu[i]];
        result.neighbors[slot] = std::move(sparse.neighbors[i]);
        result.provenance[slot] = Provenance::Sparse;
    }
    for (auto& qn : dense.solved) {
        std::uint32_t slot = slot_of[qn.id];
        result.neighbors[slot] = std::move(qn.neighbors);
        result.provenance[slot] = Provenance::Dense;
    }
    for (std::size_t i = 0; i < dense.failed.size(); ++i) {
        std::uint32_t slot = slot_of[dense.failed[i]];
        result.neighbors[slot] = std::move(rescue.neighbors[i]);
        result.provenance[slot] = Provenance::DenseFailedThenSparse;
    }
    result.timings.merge = merge_clock.seconds();

    result.failed_count = dense.failed.size();
    result.dense_stats = dense.stats;
    result.sparse_worker_counts = sparse.worker_query_counts;
    if (!part.q_cpu.empty()) result.t1 = sparse.t1_seconds;
    if (dense.t2_seconds > 0.0) result.t2 = dense.t2_seconds;
    if (result.t1 && result.t2 && *result.t1 > 0.0)
        result.rho_model = compute_rho_model(*result.t1, *result.t2);

    result.timings.measured_total = result.timings.reorder + result.timings.eps_select +
                                    result.timings.split +
                                    std::max(result.timings.dense, result.timings.sparse) +
                                    result.timings.reassign + result.timings.merge;
    return result;
}

ParameterSearchResult parameter_search(const Dataset& d, std::size_t k, double f,
                                       std::span<const std::pair<double, double>> candidates,
                                       const RunConfig& base) {
    if (!(f > 0.0) || f > 1.0) throw UsageError("query fraction f must be in (0, 1]");
    if (candidates.empty()) throw UsageError("parameter search needs at least one candidate");

    const std::uint64_t want = std::uint64_t(std::floor(f * double(d.size())));
    if (want < 50)
        throw SampleTooSmallError("parameter search sample of " + std::to_string(want) +
                                  " queries is below the floor of 50");

    std::mt19937_64 rng(derive_seed(base.seed, kSeedQuerySubset));
    std::vector<std::uint64_t> picked = sample_without_replacement(d.size(), want, rng);
    std::vector<PointId> subset(picked.begin(), picked.end());

    ParameterSearchResult search;
    bool have_best = false;
    double best_wall = 0.0;
    for (const auto& [beta, gamma] : candidates) {
        RunConfig cfg = base;
        cfg.mode = EngineMode::Hybrid;
        cfg.k = k;
        cfg.beta = beta;
        cfg.gamma = gamma;
        cfg.rho = 0.5;  // arbitrary starting balance; refined via rho_model
        cfg.query_subset = subset;

        CandidateOutcome row;
        row.beta = beta;
        row.gamma = gamma;
        try {
            KnnRunResult r = run_hybrid(d, cfg);
            row.wall_seconds = r.timings.measured_total;
            row.t1 = r.t1;
            row.t2 = r.t2;
            if (!have_best || row.wall_seconds < best_wall) {
                have_best = true;
                best_wall = row.wall_seconds;
                search.best_beta = beta;
                search.best_gamma = gamma;
                search.t1 = r.t1;
                search.t2 = r.t2;
                search.rho_model = r.rho_model;
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        search.candidates.push_back(row);
    }
    if (!have_best) throw UsageError("every parameter-search candidate failed");
    return search;
}

VerifyReport verify_against_oracle(const KnnRunResult& result, const Dataset& working,
                                   std::size_t k, std::size_t cap) {
    if (working.size() > cap)
        throw OracleCapError("dataset of " + std::to_string(working.size()) +
                             " points exceeds the oracle cap of " + std::to_string(cap) +
                             "; raise the cap to verify anyway");

    const std::size_t k_eff = std::min<std::size_t>(k, working.size() - 1);
    auto oracle = brute_force_knn(working, result.queries, k_eff, default_worker_count());

    VerifyReport report;
    report.checked = result.queries.size();
    for (std::size_t i = 0; i < result.queries.size(); ++i) {
        const auto& got = result.neighbors[i];
        const auto& want = oracle[i];
        bool same = got.size() == want.size();
        for (std::size_t j = 0; same && j < got.size(); ++j)
            same = got[j].id == want[j].id && got[j].dist == want[j].dist;
        if (!same) report.mismatched.push_back(result.queries[i]);
    }
    return report;
}

const char* to_string(EngineMode mode) {
    switch (mode) {
        case EngineMode::Hybrid: return "hybrid";
        case EngineMode::SparseOnly: return "sparse";
        case EngineMode::DenseOnly: return "dense";
        case EngineMode::BruteOracle: return "oracle";
    }
    return "?";
}

const char* to_string(Provenance p) {
    switch (p) {
        case Provenance::Dense: return "dense";
        case Provenance::Sparse: return "sparse";
        case Provenance::DenseFailedThenSparse: return "dense_failed_then_sparse";
    }
    return "?";
}

}  // namespace knnjoin
