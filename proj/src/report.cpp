#include "knnjoin/report.hpp"

#include <fstream>

#include "knnjoin/errors.hpp"
#include "knnjoin/kernels.hpp"

namespace knnjoin {

namespace {

const char* policy_name(const GranularityPolicy& p) {
    return p.mode == GranularityPolicy::Mode::TStatic ? "tstatic" : "tdynamic";
}

}  // namespace

Json make_run_report(const Dataset& original, const RunConfig& cfg, const KnnRunResult& result) {
    Json r;
    r["mode"] = to_string(result.mode);
    r["kernel"] = kernels::active_kernel().name;

    Json config;
    config["k"] = cfg.k;
    config["k_effective"] = result.k_effective;
    config["m"] = result.m_used;
    config["beta"] = cfg.beta;
    config["gamma"] = cfg.gamma;
    config["rho"] = cfg.rho;
    config["policy"] = policy_name(cfg.policy);
    config["policy_count"] = cfg.policy.count;
    config["buffer_size"] = cfg.buffer_size;
    config["n_bins"] = cfg.n_bins;
    config["hist_query_fraction"] = cfg.hist_query_fraction;
    config["batch_sample_fraction"] = cfg.batch_sample_fraction;
    config["seed"] = cfg.seed;
    config["workers"] = cfg.workers;
    config["duplicate_kd_index"] = cfg.duplicate_kd_index;
    if (cfg.query_subset) config["query_subset_size"] = cfg.query_subset->size();
    if (cfg.force_n_batches) config["force_n_batches"] = *cfg.force_n_batches;
    r["config"] = std::move(config);

    Json ds;
    ds["size"] = original.size();
    ds["dims"] = original.dims();
    ds["per_dim_variance"] = original.column_variances();
    if (result.working) ds["dim_permutation"] = result.working->dim_permutation();
    r["dataset"] = std::move(ds);

    if (result.profile) {
        const auto& p = *result.profile;
        Json eps;
        eps["eps_mean"] = p.eps_mean;
        eps["n_bins"] = p.n_bins;
        eps["bin_width"] = p.bin_width;
        eps["histogram_queries"] = p.query_count;
        eps["eps_default"] = p.eps_default;
        eps["beta"] = p.beta;
        eps["eps_beta"] = p.eps_beta;
        eps["eps_final"] = p.eps_final;
        eps["fallback"] = result.eps_fallback;
        r["epsilon"] = std::move(eps);
    }

    if (result.partition) {
        const auto& ps = *result.partition;
        Json part;
        part["q_gpu"] = ps.q_gpu;
        part["q_cpu"] = ps.q_cpu;
        part["n_min"] = ps.n_min;
        part["n_thresh"] = ps.n_thresh;
        part["demoted"] = ps.demoted;
        r["partition"] = std::move(part);
    }

    if (result.dense_stats) {
        const auto& st = *result.dense_stats;
        Json dense;
        dense["n_batches"] = st.batch_pair_counts.size();
        dense["estimate_e"] = st.estimate_e;
        dense["batch_pair_counts"] = st.batch_pair_counts;
        dense["candidates_examined"] = st.candidates_examined;
        dense["failed_queries"] = result.failed_count;
        r["dense"] = std::move(dense);
    }

    if (!result.sparse_worker_counts.empty()) {
        Json sparse;
        sparse["worker_query_counts"] = result.sparse_worker_counts;
        r["sparse"] = std::move(sparse);
    }

    Json prov;
    std::size_t dense_n = 0, sparse_n = 0, rescued_n = 0;
    for (Provenance p : result.provenance) {
        if (p == Provenance::Dense) ++dense_n;
        else if (p == Provenance::Sparse) ++sparse_n;
        else ++rescued_n;
    }
    prov["dense"] = dense_n;
    prov["sparse"] = sparse_n;
    prov["dense_failed_then_sparse"] = rescued_n;
    r["provenance"] = std::move(prov);

    r["warnings"] = result.warnings;

    Json lb;
    if (result.t1) lb["t1"] = *result.t1;
    if (result.t2) lb["t2"] = *result.t2;
    if (result.rho_model) lb["rho_model"] = *result.rho_model;
    r["load_balance"] = std::move(lb);

    Json t;
    t["reorder"] = result.timings.reorder;
    t["eps_select"] = result.timings.eps_select;
    t["grid_build"] = result.timings.grid_build;
    t["kd_build"] = result.timings.kd_build;
    t["split"] = result.timings.split;
    t["dense"] = result.timings.dense;
    t["sparse"] = result.timings.sparse;
    t["reassign"] = result.timings.reassign;
    t["merge"] = result.timings.merge;
    t["measured_total"] = result.timings.measured_total;
    t["dense_kernel_busy"] = result.dense_stats ? result.dense_stats->kernel_seconds : 0.0;
    t["dense_filter_busy"] = result.dense_stats ? result.dense_stats->filter_seconds : 0.0;
    r["timings"] = std::move(t);
    return r;
}

Json deterministic_view(Json report) {
    report.erase("timings");
    report.erase("load_balance");
    return report;
}

void write_report(const Json& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IngestError("cannot write " + path.string());
    out << report.dump(2) << '\n';
}

}  // namespace knnjoin
