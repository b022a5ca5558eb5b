#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "knnjoin/dataset.hpp"
#include "knnjoin/dense_engine.hpp"
#include "knnjoin/epsilon.hpp"
#include "knnjoin/partition.hpp"

namespace knnjoin {

enum class EngineMode { Hybrid, SparseOnly, DenseOnly, BruteOracle };

struct RunConfig {
    std::size_t k = 5;
    std::size_t m = 0;  // indexed dimensions; 0 means min(6, n)
    double beta = 0.0;
    double gamma = 0.0;
    double rho = 0.0;
    GranularityPolicy policy = GranularityPolicy::tstatic(8);
    std::uint64_t buffer_size = 1'000'000;  // desk-scale default; paper-scale is 1e8
    std::size_t n_bins = 100;
    double hist_query_fraction = 0.01;   // histogram queries, floored at 100 points
    double batch_sample_fraction = 0.01; // batch estimator, floored at 100 queries
    std::uint64_t eps_mean_pair_cap = 1'000'000;  // eps_mean uses min(10|D|, cap) pairs
    std::uint64_t seed = 0;
    unsigned workers = 0;  // 0 means hardware concurrency
    EngineMode mode = EngineMode::Hybrid;
    std::size_t kd_bucket_capacity = 16;
    bool duplicate_kd_index = false;  // per-worker tree copies (shared-nothing mirror)
    std::size_t oracle_cap = 10'000;  // verify_against_oracle refusal threshold

    // Restricts the run to a query subset (parameter search); neighbors are
    // still searched in the full dataset.
    std::optional<std::vector<PointId>> query_subset;
    // Pins the dense batch count (granularity/pipeline studies).
    std::optional<std::size_t> force_n_batches;
};

enum class Provenance : std::uint8_t { Dense, Sparse, DenseFailedThenSparse };

struct PhaseTimings {
    double reorder = 0.0;
    double eps_select = 0.0;
    double grid_build = 0.0;  // excluded from measured_total
    double kd_build = 0.0;    // excluded from measured_total
    double split = 0.0;
    double dense = 0.0;
    double sparse = 0.0;
    double reassign = 0.0;
    double merge = 0.0;
    // Response time with index construction excluded.
    double measured_total = 0.0;
};

struct PartitionSummary {
    std::size_t q_gpu = 0;
    std::size_t q_cpu = 0;
    double n_min = 0.0;
    double n_thresh = 0.0;
    std::size_t demoted = 0;
};

struct KnnRunResult {
    std::vector<PointId> queries;                  // ascending
    std::vector<std::vector<Neighbor>> neighbors;  // aligned with queries
    std::vector<Provenance> provenance;            // aligned with queries
    std::size_t k_effective = 0;

    std::optional<double> t1;  // sparse engine per-query seconds (Q^CPU only)
    std::optional<double> t2;  // dense engine per-query seconds (solved only)
    std::optional<double> rho_model;
    PhaseTimings timings;

    std::shared_ptr<const Dataset> working;  // variance-reordered dataset
    std::optional<EpsilonProfile> profile;
    std::optional<PartitionSummary> partition;
    std::optional<DenseJoinStats> dense_stats;
    std::size_t failed_count = 0;
    std::vector<std::size_t> sparse_worker_counts;
    bool eps_fallback = false;  // beta target was unreachable; clamped to max
    std::vector<std::string> warnings;
    EngineMode mode = EngineMode::Hybrid;
    std::size_t m_used = 0;
    double eps_used = 0.0;
};

// Full pipeline: variance reorder, epsilon selection, grid build, work split,
// concurrent dense + sparse execution, failed-query reassignment, merge.
// SparseOnly, DenseOnly and BruteOracle modes run reduced pipelines over the
// same reordered dataset and produce identical neighbor lists.
KnnRunResult run_hybrid(const Dataset& d, const RunConfig& cfg);

struct CandidateOutcome {
    double beta = 0.0;
    double gamma = 0.0;
    double wall_seconds = 0.0;
    std::optional<double> t1, t2;
    std::string error;  // non-empty if the candidate failed
};

struct ParameterSearchResult {
    double best_beta = 0.0;
    double best_gamma = 0.0;
    std::optional<double> t1, t2;
    std::optional<double> rho_model;
    std::vector<CandidateOutcome> candidates;
};

// Runs each (beta, gamma) candidate over a seeded f-fraction query subset at
// rho = 0.5, picks the fastest, and derives rho_model from its measured
// T1/T2 for subsequent full runs. f * |D| below 50 queries is refused.
ParameterSearchResult parameter_search(const Dataset& d, std::size_t k, double f,
                                       std::span<const std::pair<double, double>> candidates,
                                       const RunConfig& base);

struct VerifyReport {
    std::vector<PointId> mismatched;
    std::size_t checked = 0;
    bool ok() const { return mismatched.empty(); }
};

// Recomputes exact KNN per query by full sort under the canonical
// (distance, id) order and lists every query whose neighbor list differs.
// Refused above the oracle cap.
VerifyReport verify_against_oracle(const KnnRunResult& result, const Dataset& working,
                                   std::size_t k, std::size_t cap);

const char* to_string(EngineMode mode);
const char* to_string(Provenance p);

}  // namespace knnjoin
