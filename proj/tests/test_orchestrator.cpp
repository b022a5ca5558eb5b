#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "knnjoin/errors.hpp"
#include "knnjoin/io.hpp"
#include "knnjoin/orchestrator.hpp"
#include "knnjoin/synthetic.hpp"
#include "support/oracle.hpp"

using namespace knnjoin;

namespace {

RunConfig small_cfg(std::size_t k, EngineMode mode, std::uint64_t seed = 0) {
    RunConfig cfg;
    cfg.k = k;
    cfg.mode = mode;
    cfg.seed = seed;
    cfg.workers = 2;
    cfg.hist_query_fraction = 1.0;
    cfg.batch_sample_fraction = 1.0;
    return cfg;
}

void check_exact(const KnnRunResult& r, const Dataset& working, std::size_t k) {
    REQUIRE(r.queries.size() == r.neighbors.size());
    for (std::size_t i = 0; i < r.queries.size(); ++i) {
        auto want = testsupport::brute_knn(working, r.queries[i], k);
        const auto& got = r.neighbors[i];
        REQUIRE(got.size() == want.size());
        for (std::size_t j = 0; j < want.size(); ++j) {
            CHECK(got[j].id == want[j].id);
            CHECK(got[j].dist == doctest::Approx(want[j].dist).epsilon(1e-12));
        }
    }
}

}  // namespace

TEST_CASE("all engine modes agree with the oracle byte for byte") {
    auto d = testsupport::random_dataset(600, 4, 100);
    for (auto mode : {EngineMode::BruteOracle, EngineMode::Hybrid, EngineMode::SparseOnly,
                      EngineMode::DenseOnly}) {
        RunConfig cfg = small_cfg(5, mode, 17);
        cfg.beta = 0.2;
        cfg.gamma = 0.3;
        cfg.rho = 0.25;
        KnnRunResult r = run_hybrid(d, cfg);
        check_exact(r, *r.working, 5);
    }
}

TEST_CASE("mode TSVs are byte-identical") {
    auto d = testsupport::random_dataset(500, 6, 101);
    std::string oracle_tsv = tsv_string(run_hybrid(d, small_cfg(7, EngineMode::BruteOracle, 3)));
    for (auto mode : {EngineMode::Hybrid, EngineMode::SparseOnly, EngineMode::DenseOnly}) {
        RunConfig cfg = small_cfg(7, mode, 3);
        cfg.m = 3;
        CHECK(tsv_string(run_hybrid(d, cfg)) == oracle_tsv);
    }
}

TEST_CASE("rho=1 degenerates to a pure sparse run with unchanged output") {
    auto d = testsupport::random_dataset(400, 3, 102);
    RunConfig cfg = small_cfg(4, EngineMode::Hybrid, 5);
    cfg.rho = 1.0;
    KnnRunResult r = run_hybrid(d, cfg);
    for (auto p : r.provenance) CHECK(p == Provenance::Sparse);
    CHECK(tsv_string(r) == tsv_string(run_hybrid(d, small_cfg(4, EngineMode::BruteOracle, 5))));
}

TEST_CASE("induced dense failures stay exact and are marked") {
    // flat sheet in the x-y plane plus scattered points well above it; the
    // tall points share grid cells with the sheet but have no neighbors
    // within eps, so their dense queries fail and fall back to the kd-tree
    std::vector<double> coords;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> xpick(0.0, 100.0);
    std::uniform_real_distribution<double> ypick(5.0, 63.0);
    const std::size_t sheet = 1300, tall = 700;
    for (std::size_t i = 0; i < sheet; ++i) {
        coords.push_back(xpick(rng));
        coords.push_back(0.0001 * double(i % 7));
    }
    for (std::size_t i = 0; i < tall; ++i) {
        coords.push_back(xpick(rng));
        coords.push_back(ypick(rng));
    }
    Dataset d(std::move(coords), 2);

    RunConfig cfg = small_cfg(5, EngineMode::Hybrid, 11);
    cfg.m = 1;
    cfg.beta = 0.0;
    cfg.rho = 0.0;
    KnnRunResult r = run_hybrid(d, cfg);

    std::size_t failed = 0;
    for (std::size_t i = 0; i < r.queries.size(); ++i)
        if (r.provenance[i] == Provenance::DenseFailedThenSparse) ++failed;
    CHECK(failed == r.failed_count);
    CHECK(failed > 0);
    check_exact(r, *r.working, 5);
}

TEST_CASE("provenance counts partition the query set") {
    auto [d, labels] = generate_synthetic_labeled(SyntheticSpec::parse("mixture"), 900, 4, 9);
    RunConfig cfg = small_cfg(5, EngineMode::Hybrid, 13);
    cfg.rho = 0.3;
    KnnRunResult r = run_hybrid(d, cfg);
    REQUIRE(r.provenance.size() == d.size());
    std::size_t dense = 0, sparse = 0, rescued = 0;
    for (auto p : r.provenance) {
        if (p == Provenance::Dense) ++dense;
        else if (p == Provenance::Sparse) ++sparse;
        else ++rescued;
    }
    CHECK(dense + sparse + rescued == d.size());
    CHECK(rescued == r.failed_count);
    check_exact(r, *r.working, 5);
}

TEST_CASE("identical seed and config reproduce the TSV byte for byte") {
    auto d = testsupport::random_dataset(700, 5, 103);
    RunConfig cfg = small_cfg(6, EngineMode::Hybrid, 21);
    cfg.rho = 0.4;
    std::string a = tsv_string(run_hybrid(d, cfg));
    std::string b = tsv_string(run_hybrid(d, cfg));
    CHECK(a == b);
}

TEST_CASE("worker count never changes the TSV") {
    auto d = testsupport::random_dataset(500, 4, 104);
    RunConfig cfg = small_cfg(5, EngineMode::Hybrid, 23);
    cfg.rho = 0.5;
    cfg.workers = 1;
    std::string base = tsv_string(run_hybrid(d, cfg));
    for (unsigned w : {2u, 3u}) {
        cfg.workers = w;
        CHECK(tsv_string(run_hybrid(d, cfg)) == base);
    }
}

TEST_CASE("beta target beyond the histogram reach falls back and stays exact") {
    auto d = testsupport::random_dataset(300, 3, 105);
    RunConfig cfg = small_cfg(5, EngineMode::Hybrid, 29);
    cfg.beta = 1.0;  // target 500 cumulative neighbors in a 300-point set
    KnnRunResult r = run_hybrid(d, cfg);
    CHECK(r.eps_fallback);
    check_exact(r, *r.working, 5);
}

TEST_CASE("k is clamped to |D|-1 with a warning") {
    auto d = testsupport::random_dataset(40, 2, 106);
    RunConfig cfg = small_cfg(100, EngineMode::Hybrid, 31);
    KnnRunResult r = run_hybrid(d, cfg);
    CHECK(r.k_effective == 39);
    REQUIRE(!r.warnings.empty());
    for (const auto& lists : r.neighbors) CHECK(lists.size() == 39);
    check_exact(r, *r.working, 39);
}

TEST_CASE("single-point dataset yields empty neighbor lists") {
    Dataset d({1.0, 2.0, 3.0}, 3);
    KnnRunResult r = run_hybrid(d, small_cfg(5, EngineMode::Hybrid, 1));
    REQUIRE(r.queries.size() == 1);
    CHECK(r.neighbors[0].empty());
    CHECK(r.k_effective == 0);
}

TEST_CASE("query subsets solve only the subset, against the full dataset") {
    auto d = testsupport::random_dataset(400, 3, 107);
    RunConfig cfg = small_cfg(4, EngineMode::Hybrid, 37);
    cfg.query_subset = std::vector<PointId>{5, 17, 100, 399};
    KnnRunResult r = run_hybrid(d, cfg);
    CHECK(r.queries == std::vector<PointId>{5, 17, 100, 399});
    check_exact(r, *r.working, 4);
}

TEST_CASE("verify_against_oracle accepts correct output and pinpoints a fault") {
    auto d = testsupport::random_dataset(300, 4, 108);
    RunConfig cfg = small_cfg(5, EngineMode::Hybrid, 41);
    KnnRunResult r = run_hybrid(d, cfg);
    VerifyReport ok = verify_against_oracle(r, *r.working, 5, 10'000);
    CHECK(ok.ok());
    CHECK(ok.checked == 300);

    // perturb exactly one neighbor id
    r.neighbors[123][2].id = r.neighbors[123][2].id == 0 ? 1 : 0;
    VerifyReport bad = verify_against_oracle(r, *r.working, 5, 10'000);
    REQUIRE(bad.mismatched.size() == 1);
    CHECK(bad.mismatched[0] == 123);
}

TEST_CASE("verify_against_oracle handles clamped k and refuses huge datasets") {
    auto d = testsupport::random_dataset(30, 2, 109);
    RunConfig cfg = small_cfg(100, EngineMode::SparseOnly, 43);
    KnnRunResult r = run_hybrid(d, cfg);
    VerifyReport rep = verify_against_oracle(r, *r.working, 100, 10'000);
    CHECK(rep.ok());
    CHECK_THROWS_AS(verify_against_oracle(r, *r.working, 100, 10), OracleCapError);
}

TEST_CASE("parameter search returns the single candidate unchanged") {
    auto d = testsupport::random_dataset(800, 3, 110);
    RunConfig base = small_cfg(5, EngineMode::Hybrid, 47);
    std::vector<std::pair<double, double>> cands{{0.0, 0.0}};
    ParameterSearchResult r = parameter_search(d, 5, 0.25, cands, base);
    CHECK(r.best_beta == 0.0);
    CHECK(r.best_gamma == 0.0);
    CHECK(r.candidates.size() == 1);
    CHECK(r.candidates[0].error.empty());
}

TEST_CASE("parameter search rejects samples below the floor") {
    auto d = testsupport::random_dataset(100, 2, 111);
    RunConfig base = small_cfg(3, EngineMode::Hybrid, 53);
    std::vector<std::pair<double, double>> cands{{0.0, 0.0}};
    CHECK_THROWS_AS(parameter_search(d, 3, 0.05, cands, base), SampleTooSmallError);
}

TEST_CASE("parameter search runs the default grid and derives rho_model") {
    auto d = generate_synthetic(SyntheticSpec::parse("mixture"), 2000, 4, 17);
    RunConfig base = small_cfg(5, EngineMode::Hybrid, 59);
    std::vector<std::pair<double, double>> cands{{0, 0}, {0, 0.8}, {1, 0}, {1, 0.8}};
    ParameterSearchResult r = parameter_search(d, 5, 0.5, cands, base);
    CHECK(r.candidates.size() == 4);
    // the winner must be one of the grid entries and carry timings
    bool found = false;
    for (const auto& c : cands)
        if (c.first == r.best_beta && c.second == r.best_gamma) found = true;
    CHECK(found);
    if (r.rho_model) {
        CHECK(*r.rho_model > 0.0);
        CHECK(*r.rho_model < 1.0);
    }
}

TEST_CASE("invalid configs are rejected up front") {
    auto d = testsupport::random_dataset(50, 3, 112);
    RunConfig cfg = small_cfg(0, EngineMode::Hybrid, 1);
    CHECK_THROWS_AS(run_hybrid(d, cfg), UsageError);
    cfg = small_cfg(3, EngineMode::Hybrid, 1);
    cfg.m = 9;
    CHECK_THROWS_AS(run_hybrid(d, cfg), UsageError);
    cfg = small_cfg(3, EngineMode::Hybrid, 1);
    cfg.beta = 1.5;
    CHECK_THROWS_AS(run_hybrid(d, cfg), UsageError);
}
