#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "knnjoin/errors.hpp"
#include "knnjoin/io.hpp"
#include "knnjoin/kernels.hpp"
#include "knnjoin/orchestrator.hpp"
#include "knnjoin/report.hpp"
#include "knnjoin/synthetic.hpp"
#include "knnjoin/util.hpp"

using namespace knnjoin;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;     // bad flags, unparsable input
constexpr int kExitMismatch = 2;  // --verify found differences
constexpr int kExitRuntime = 3;   // run-level failure (overflow, degenerate profile)

struct DatasetArgs {
    std::string input;
    std::string format = "csv";
    std::string synthetic;
    std::size_t size = 10'000;
    std::size_t dims = 4;

    void attach(CLI::App* cmd) {
        cmd->add_option("--input", input, "dataset file to ingest");
        cmd->add_option("--format", format, "input format: csv, tsv, bin")
            ->check(CLI::IsMember({"csv", "tsv", "bin"}));
        cmd->add_option("--synthetic", synthetic,
                        "generate data instead: uniform | clusters[:c[:spread]] | mixture");
        cmd->add_option("--size", size, "synthetic point count");
        cmd->add_option("--dims", dims, "synthetic dimension count");
    }

    Dataset load(std::uint64_t seed) const {
        if (input.empty() == synthetic.empty())
            throw UsageError("exactly one of --input and --synthetic is required");
        if (!input.empty()) return ingest_dataset(input, format_from_string(format));
        return generate_synthetic(SyntheticSpec::parse(synthetic), size, dims, seed);
    }
};

GranularityPolicy parse_policy(const std::string& text) {
    auto colon = text.find(':');
    std::string kind = text.substr(0, colon);
    std::uint64_t count = 0;
    if (colon == std::string::npos || (count = std::stoull(text.substr(colon + 1))) < 1)
        throw UsageError("policy must be tstatic:<threads> or tdynamic:<min-total-threads>");
    if (kind == "tstatic") return GranularityPolicy::tstatic(count);
    if (kind == "tdynamic") return GranularityPolicy::tdynamic(count);
    throw UsageError("unknown policy '" + kind + "'");
}

EngineMode parse_mode(const std::string& text) {
    if (text == "hybrid") return EngineMode::Hybrid;
    if (text == "sparse") return EngineMode::SparseOnly;
    if (text == "dense") return EngineMode::DenseOnly;
    if (text == "oracle") return EngineMode::BruteOracle;
    throw UsageError("unknown mode '" + text + "'");
}

struct RunArgs {
    DatasetArgs data;
    RunConfig cfg;
    std::string policy = "tstatic:8";
    std::string mode = "hybrid";
    std::string kernel = "auto";
    double sample_f = 0.0;  // sets both sample fractions when given
    std::string out_path;
    std::string report_path;
    std::string profile_path;
    bool verify = false;

    void attach(CLI::App* cmd) {
        data.attach(cmd);
        cmd->add_option("--k", cfg.k, "neighbors per query");
        cmd->add_option("--m", cfg.m, "indexed dimensions (default min(6, n))");
        cmd->add_option("--beta", cfg.beta, "search radius growth in [0,1]");
        cmd->add_option("--gamma", cfg.gamma, "density threshold growth in [0,1]");
        cmd->add_option("--rho", cfg.rho, "minimum sparse-engine query fraction in [0,1]");
        cmd->add_option("--policy", policy, "tstatic:<w> or tdynamic:<t>");
        cmd->add_option("--buffer-size", cfg.buffer_size, "per-batch result buffer capacity");
        cmd->add_option("--bins", cfg.n_bins, "distance histogram bins");
        cmd->add_option("--sample-f", sample_f,
                        "sample fraction for the histogram and batch estimator");
        cmd->add_option("--workers", cfg.workers, "worker threads (0 = hardware)");
        cmd->add_option("--mode", mode, "hybrid | sparse | dense | oracle");
        cmd->add_option("--seed", cfg.seed, "run seed");
        cmd->add_option("--kernel", kernel, "distance kernel: auto, scalar, avx2");
        cmd->add_option("--oracle-cap", cfg.oracle_cap, "verification size limit");
        cmd->add_option("--out", out_path, "neighbor TSV output path");
        cmd->add_option("--report", report_path, "JSON run report path");
        cmd->add_option("--profile", profile_path, "epsilon histogram text report path");
        cmd->add_flag("--verify", verify, "check the result against the quadratic oracle");
    }

    RunConfig config() const {
        RunConfig c = cfg;
        c.policy = parse_policy(policy);
        c.mode = parse_mode(mode);
        if (sample_f > 0.0) {
            c.hist_query_fraction = sample_f;
            c.batch_sample_fraction = sample_f;
        }
        return c;
    }
};

void apply_kernel(const std::string& name) {
    if (!kernels::set_active_kernel(name))
        throw UsageError("kernel '" + name + "' is not available on this machine");
}

int do_run(const RunArgs& args) {
    RunConfig cfg = args.config();
    apply_kernel(args.kernel);
    Dataset d = args.data.load(cfg.seed);
    KnnRunResult result = run_hybrid(d, cfg);

    if (!args.out_path.empty()) {
        std::ofstream out(args.out_path);
        if (!out) throw IngestError("cannot write " + args.out_path);
        write_tsv(result, out);
    }
    if (!args.report_path.empty()) write_report(make_run_report(d, cfg, result), args.report_path);
    if (!args.profile_path.empty()) {
        if (!result.profile) throw UsageError("mode '" + args.mode + "' builds no eps profile");
        std::ofstream out(args.profile_path);
        if (!out) throw IngestError("cannot write " + args.profile_path);
        out << result.profile->to_text();
    }

    const auto& t = result.timings;
    std::fprintf(stderr, "[%s] |D|=%zu n=%zu m=%zu k=%zu eps=%g wall=%.3fs\n",
                 to_string(result.mode), d.size(), d.dims(), result.m_used, result.k_effective,
                 result.eps_used, t.measured_total);
    if (result.partition)
        std::fprintf(stderr,
                     "  split: q_gpu=%zu q_cpu=%zu n_min=%.3f n_thresh=%.3f demoted=%zu "
                     "failed=%zu\n",
                     result.partition->q_gpu, result.partition->q_cpu, result.partition->n_min,
                     result.partition->n_thresh, result.partition->demoted, result.failed_count);
    if (result.rho_model)
        std::fprintf(stderr, "  t1=%.3e t2=%.3e rho_model=%.3f\n", *result.t1, *result.t2,
                     *result.rho_model);
    for (const auto& w : result.warnings) std::fprintf(stderr, "  warning: %s\n", w.c_str());

    if (args.verify) {
        VerifyReport rep = verify_against_oracle(
            result, *result.working, result.k_effective == 0 ? 1 : result.k_effective,
            cfg.oracle_cap);
        if (!rep.ok()) {
            std::fprintf(stderr, "  VERIFY FAILED: %zu mismatched queries (first: %u)\n",
                         rep.mismatched.size(), rep.mismatched.front());
            return kExitMismatch;
        }
        std::fprintf(stderr, "  verify: %zu queries match the oracle exactly\n", rep.checked);
    }
    return kExitOk;
}

struct SweepArgs {
    RunArgs run;
    std::vector<std::size_t> k_list;
    std::vector<double> beta_list, gamma_list, rho_list;
    std::vector<std::string> policy_list;
    bool refine_rho = false;
    std::string out_path = "sweep.tsv";

    void attach(CLI::App* cmd) {
        run.attach(cmd);
        cmd->add_option("--k-list", k_list, "k values (overrides --k)")->delimiter(',');
        cmd->add_option("--beta-list", beta_list, "beta values")->delimiter(',');
        cmd->add_option("--gamma-list", gamma_list, "gamma values")->delimiter(',');
        cmd->add_option("--rho-list", rho_list, "rho values")->delimiter(',');
        cmd->add_option("--policy-list", policy_list, "policies")->delimiter(',');
        cmd->add_flag("--refine-rho", refine_rho,
                      "after each cell, rerun with rho = rho_model derived from it");
        cmd->add_option("--sweep-out", out_path, "long-form sweep table path");
    }
};

// Runs one cell, writes its row, and reports the rho_model it measured (if
// any) so a refinement rerun can reuse it.
std::optional<double> sweep_row(std::ostream& out, const Dataset& d, const RunConfig& cfg,
                                bool refined) {
    out << cfg.k << '\t' << cfg.beta << '\t' << cfg.gamma << '\t' << cfg.rho << '\t'
        << (cfg.policy.mode == GranularityPolicy::Mode::TStatic ? "tstatic" : "tdynamic") << ':'
        << cfg.policy.count << '\t' << (refined ? "rho_model" : "grid") << '\t';
    try {
        KnnRunResult r = run_hybrid(d, cfg);
        double t1 = r.t1.value_or(0.0), t2 = r.t2.value_or(0.0);
        std::size_t q_cpu = r.partition ? r.partition->q_cpu : 0;
        std::size_t q_gpu = r.partition ? r.partition->q_gpu : 0;
        double imbalance = std::abs(t1 * double(q_cpu) - t2 * double(q_gpu));
        out << r.timings.measured_total << '\t' << t1 << '\t' << t2 << '\t' << r.failed_count
            << '\t';
        if (r.rho_model) out << *r.rho_model;
        else out << "na";
        out << '\t' << imbalance << "\tok\n";
        return r.rho_model;
    } catch (const std::exception& e) {
        out << "na\tna\tna\tna\tna\tna\terror: " << e.what() << '\n';
        return std::nullopt;
    }
}

int do_sweep(const SweepArgs& args) {
    RunConfig base = args.run.config();
    apply_kernel(args.run.kernel);
    Dataset d = args.run.data.load(base.seed);

    auto k_values = args.k_list.empty() ? std::vector<std::size_t>{base.k} : args.k_list;
    auto betas = args.beta_list.empty() ? std::vector<double>{base.beta} : args.beta_list;
    auto gammas = args.gamma_list.empty() ? std::vector<double>{base.gamma} : args.gamma_list;
    auto rhos = args.rho_list.empty() ? std::vector<double>{base.rho} : args.rho_list;
    std::vector<GranularityPolicy> policies;
    if (args.policy_list.empty()) policies.push_back(base.policy);
    for (const auto& p : args.policy_list) policies.push_back(parse_policy(p));

    std::ofstream out(args.out_path);
    if (!out) throw IngestError("cannot write " + args.out_path);
    out << "k\tbeta\tgamma\trho\tpolicy\tsource\twall_s\tt1\tt2\tfailed\trho_model\timbalance\t"
           "status\n";

    for (std::size_t k : k_values)
        for (double beta : betas)
            for (double gamma : gammas)
                for (const auto& policy : policies)
                    for (double rho : rhos) {
                        RunConfig cfg = base;
                        cfg.k = k;
                        cfg.beta = beta;
                        cfg.gamma = gamma;
                        cfg.rho = rho;
                        cfg.policy = policy;
                        std::optional<double> rho_model = sweep_row(out, d, cfg, false);
                        if (args.refine_rho && rho_model) {
                            RunConfig refined = cfg;
                            refined.rho = *rho_model;
                            sweep_row(out, d, refined, true);
                        }
                    }
    std::fprintf(stderr, "sweep table written to %s\n", args.out_path.c_str());
    return kExitOk;
}

struct SearchArgs {
    RunArgs run;
    double f = 0.01;
    std::vector<double> beta_list{0.0, 1.0};
    std::vector<double> gamma_list{0.0, 0.8};

    void attach(CLI::App* cmd) {
        run.attach(cmd);
        cmd->add_option("--f", f, "fraction of queries to process per candidate");
        cmd->add_option("--search-beta", beta_list, "beta candidates")->delimiter(',');
        cmd->add_option("--search-gamma", gamma_list, "gamma candidates")->delimiter(',');
    }
};

int do_search(const SearchArgs& args) {
    RunConfig base = args.run.config();
    apply_kernel(args.run.kernel);
    Dataset d = args.run.data.load(base.seed);

    std::vector<std::pair<double, double>> candidates;
    for (double b : args.beta_list)
        for (double g : args.gamma_list) candidates.emplace_back(b, g);

    ParameterSearchResult r = parameter_search(d, base.k, args.f, candidates, base);
    std::printf("candidate\tbeta\tgamma\twall_s\tstatus\n");
    for (std::size_t i = 0; i < r.candidates.size(); ++i) {
        const auto& c = r.candidates[i];
        std::printf("%zu\t%g\t%g\t%g\t%s\n", i, c.beta, c.gamma, c.wall_seconds,
                    c.error.empty() ? "ok" : c.error.c_str());
    }
    std::printf("best\t%g\t%g\n", r.best_beta, r.best_gamma);
    if (r.rho_model) std::printf("t1\t%.6e\nt2\t%.6e\nrho_model\t%.4f\n", *r.t1, *r.t2, *r.rho_model);
    return kExitOk;
}

struct GenArgs {
    std::string spec = "uniform";
    std::size_t size = 10'000;
    std::size_t dims = 4;
    std::uint64_t seed = 0;
    std::string format = "csv";
    std::string out_path;

    void attach(CLI::App* cmd) {
        cmd->add_option("--kind", spec, "uniform | clusters[:c[:spread]] | mixture");
        cmd->add_option("--size", size, "point count")->required();
        cmd->add_option("--dims", dims, "dimension count")->required();
        cmd->add_option("--seed", seed, "generation seed");
        cmd->add_option("--format", format, "csv, tsv, bin")
            ->check(CLI::IsMember({"csv", "tsv", "bin"}));
        cmd->add_option("--out", out_path, "output path")->required();
    }
};

int do_gen(const GenArgs& args) {
    Dataset d =
        generate_synthetic(SyntheticSpec::parse(args.spec), args.size, args.dims, args.seed);
    export_dataset(d, args.out_path, format_from_string(args.format));
    std::fprintf(stderr, "wrote %zu x %zu dataset to %s\n", d.size(), d.dims(),
                 args.out_path.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact KNN self-join with density-split dense/sparse engines"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run_cmd = app.add_subcommand("run", "solve one KNN self-join");
    run_args.attach(run_cmd);

    SweepArgs sweep_args;
    auto* sweep_cmd = app.add_subcommand("sweep", "grid-sweep parameters, one row per cell");
    sweep_args.attach(sweep_cmd);

    SearchArgs search_args;
    auto* search_cmd = app.add_subcommand("search", "sampled parameter search over (beta, gamma)");
    search_args.attach(search_cmd);

    GenArgs gen_args;
    auto* gen_cmd = app.add_subcommand("gen", "write a synthetic dataset");
    gen_args.attach(gen_cmd);

    try {
        app.parse(argc, argv);
        if (run_cmd->parsed()) return do_run(run_args);
        if (sweep_cmd->parsed()) return do_sweep(sweep_args);
        if (search_cmd->parsed()) return do_search(search_args);
        if (gen_cmd->parsed()) return do_gen(gen_args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const IngestError& e) {
        std::fprintf(stderr, "ingest error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "run failed: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
