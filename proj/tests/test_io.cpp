#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "knnjoin/errors.hpp"
#include "knnjoin/io.hpp"
#include "knnjoin/report.hpp"
#include "knnjoin/synthetic.hpp"
#include "support/oracle.hpp"

using namespace knnjoin;
namespace fs = std::filesystem;

namespace {

struct TempFile {
    fs::path path;
    explicit TempFile(const std::string& name) : path(fs::temp_directory_path() / name) {}
    ~TempFile() { std::error_code ec; fs::remove(path, ec); }
    void write(const std::string& text) {
        std::ofstream out(path);
        out << text;
    }
};

}  // namespace

TEST_CASE("csv ingestion") {
    TempFile f("knnjoin_basic.csv");
    f.write("0,0\n3,4\n");
    Dataset d = ingest_dataset(f.path, FileFormat::Csv);
    CHECK(d.size() == 2);
    CHECK(d.dims() == 2);
    CHECK(d.coord(1, 1) == 4.0);
}

TEST_CASE("tsv ingestion skips blank lines and handles CRLF") {
    TempFile f("knnjoin_basic.tsv");
    f.write("1\t2\r\n\n3\t4\n");
    Dataset d = ingest_dataset(f.path, FileFormat::Tsv);
    CHECK(d.size() == 2);
    CHECK(d.coord(1, 0) == 3.0);
}

TEST_CASE("non-numeric field names its row and column") {
    TempFile f("knnjoin_bad.csv");
    f.write("0,0\nabc,4\n");
    CHECK_THROWS_AS(ingest_dataset(f.path, FileFormat::Csv), IngestError);
    try {
        ingest_dataset(f.path, FileFormat::Csv);
    } catch (const IngestError& e) {
        std::string msg = e.what();
        CHECK(msg.find("row 2") != std::string::npos);
        CHECK(msg.find("abc") != std::string::npos);
    }
}

TEST_CASE("ragged rows are rejected with their location") {
    TempFile f("knnjoin_ragged.csv");
    f.write("0,0\n1,2,3\n");
    try {
        ingest_dataset(f.path, FileFormat::Csv);
        FAIL("expected IngestError");
    } catch (const IngestError& e) {
        CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
}

TEST_CASE("non-finite values are rejected") {
    TempFile f("knnjoin_inf.csv");
    f.write("0,0\n1,inf\n");
    CHECK_THROWS_AS(ingest_dataset(f.path, FileFormat::Csv), IngestError);
}

TEST_CASE("binary round-trip is bit exact") {
    auto d = testsupport::random_dataset(137, 9, 55);
    TempFile f("knnjoin_roundtrip.bin");
    export_dataset(d, f.path, FileFormat::BinaryF64);
    Dataset back = ingest_dataset(f.path, FileFormat::BinaryF64);
    CHECK(back.size() == d.size());
    CHECK(back.dims() == d.dims());
    CHECK(back.raw() == d.raw());
}

TEST_CASE("binary header/body mismatch is an ingest error") {
    TempFile f("knnjoin_short.bin");
    {
        std::ofstream out(f.path, std::ios::binary);
        std::uint64_t size = 10, dims = 4;
        out.write(reinterpret_cast<const char*>(&size), 8);
        out.write(reinterpret_cast<const char*>(&dims), 8);
        double one = 1.0;
        out.write(reinterpret_cast<const char*>(&one), 8);  // far too short
    }
    CHECK_THROWS_AS(ingest_dataset(f.path, FileFormat::BinaryF64), IngestError);
}

TEST_CASE("text export round-trips through ingestion") {
    auto d = testsupport::random_dataset(40, 3, 56);
    TempFile f("knnjoin_text_rt.csv");
    export_dataset(d, f.path, FileFormat::Csv);
    Dataset back = ingest_dataset(f.path, FileFormat::Csv);
    CHECK(back.raw() == d.raw());  // %.17g preserves doubles exactly
}

TEST_CASE("same seed regenerates the same synthetic dataset") {
    for (const char* spec : {"uniform", "clusters:4:0.03", "mixture"}) {
        Dataset a = generate_synthetic(SyntheticSpec::parse(spec), 500, 5, 99);
        Dataset b = generate_synthetic(SyntheticSpec::parse(spec), 500, 5, 99);
        CHECK(a.raw() == b.raw());
        Dataset c = generate_synthetic(SyntheticSpec::parse(spec), 500, 5, 100);
        CHECK(a.raw() != c.raw());
    }
}

TEST_CASE("cluster members are closer within a cluster than across") {
    auto [d, labels] =
        generate_synthetic_labeled(SyntheticSpec::parse("clusters:3:0.02"), 300, 4, 7);
    double within = 0, across = 0;
    std::size_t n_within = 0, n_across = 0;
    for (PointId a = 0; a < d.size(); ++a) {
        for (PointId b = a + 1; b < d.size(); ++b) {
            double dist = testsupport::naive_dist(d, a, b);
            if (labels[a] == labels[b]) {
                within += dist;
                ++n_within;
            } else {
                across += dist;
                ++n_across;
            }
        }
    }
    CHECK(within / double(n_within) < across / double(n_across));
}

TEST_CASE("synthetic spec parsing") {
    SyntheticSpec s = SyntheticSpec::parse("clusters:7:0.25");
    CHECK(s.kind == SyntheticSpec::Kind::GaussianClusters);
    CHECK(s.clusters == 7);
    CHECK(s.spread == 0.25);
    CHECK_THROWS_AS(SyntheticSpec::parse("blobs"), UsageError);
    CHECK_THROWS_AS(generate_synthetic(SyntheticSpec::parse("uniform"), 1, 2, 0), UsageError);
}

TEST_CASE("tsv lines are sorted by query then rank") {
    auto d = testsupport::random_dataset(60, 2, 57);
    RunConfig cfg;
    cfg.k = 3;
    cfg.mode = EngineMode::SparseOnly;
    cfg.workers = 2;
    KnnRunResult r = run_hybrid(d, cfg);
    std::string tsv = tsv_string(r);

    std::istringstream in(tsv);
    std::string line;
    long prev_q = -1;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
        ++lines;
        auto tab1 = line.find('\t');
        long q = std::stol(line.substr(0, tab1));
        CHECK(q >= prev_q);
        prev_q = q;
    }
    CHECK(lines == 60 * 3);
}

TEST_CASE("report serializes with stable key order") {
    auto d = testsupport::random_dataset(120, 3, 58);
    RunConfig cfg;
    cfg.k = 4;
    cfg.workers = 2;
    cfg.hist_query_fraction = 1.0;
    cfg.batch_sample_fraction = 1.0;
    KnnRunResult r = run_hybrid(d, cfg);
    Json a = make_run_report(d, cfg, r);
    Json b = make_run_report(d, cfg, r);
    CHECK(a.dump() == b.dump());
    CHECK(a.contains("timings"));
    Json det = deterministic_view(a);
    CHECK_FALSE(det.contains("timings"));
    CHECK_FALSE(det.contains("load_balance"));
    CHECK(det.contains("partition"));
}

TEST_CASE("deterministic report view is identical across reruns") {
    auto d = testsupport::random_dataset(150, 3, 59);
    RunConfig cfg;
    cfg.k = 5;
    cfg.workers = 2;
    cfg.rho = 0.5;
    cfg.hist_query_fraction = 1.0;
    cfg.batch_sample_fraction = 1.0;
    KnnRunResult r1 = run_hybrid(d, cfg);
    KnnRunResult r2 = run_hybrid(d, cfg);
    Json a = deterministic_view(make_run_report(d, cfg, r1));
    Json b = deterministic_view(make_run_report(d, cfg, r2));
    CHECK(a.dump() == b.dump());
}
