#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "knnjoin/dataset.hpp"
#include "knnjoin/distance.hpp"
#include "knnjoin/errors.hpp"
#include "support/oracle.hpp"

using namespace knnjoin;

TEST_CASE("euclidean distance: 3-4-5 triangle") {
    std::vector<double> a{0, 0}, b{3, 4};
    CHECK(euclidean_distance(a, b) == 5.0);
}

TEST_CASE("euclidean distance: identity") {
    std::vector<double> a{1.5, -2.25, 7.0};
    CHECK(euclidean_distance(a, a) == 0.0);
}

TEST_CASE("euclidean distance: direct formula evaluation") {
    std::vector<double> a{1, 1, 1}, b{2, 3, 4};
    CHECK(euclidean_distance(a, b) == doctest::Approx(3.7416573867739413).epsilon(1e-15));
}

TEST_CASE("euclidean distance: dimension mismatch is a usage error") {
    std::vector<double> a{0, 0}, b{1, 2, 3};
    CHECK_THROWS_AS(euclidean_distance(a, b), UsageError);
}

TEST_CASE("distance symmetry and non-negativity on random pairs") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(-5, 5);
    for (int iter = 0; iter < 500; ++iter) {
        std::size_t n = 1 + rng() % 20;
        std::vector<double> a(n), b(n);
        for (auto& v : a) v = dist(rng);
        for (auto& v : b) v = dist(rng);
        double ab = euclidean_distance(a, b);
        CHECK(ab >= 0.0);
        CHECK(ab == euclidean_distance(b, a));
    }
}

TEST_CASE("short-circuit distance: inclusive boundary") {
    std::vector<double> a{0, 0}, b{3, 4};
    auto r = short_circuit_distance(a, b, 5.0);
    REQUIRE(r.within());
    CHECK(r.distance == 5.0);
    CHECK(r.threshold == 5.0);
}

TEST_CASE("short-circuit distance: exceeded carries no distance") {
    std::vector<double> a{0, 0}, b{3, 4};
    auto r = short_circuit_distance(a, b, 4.9);
    CHECK_FALSE(r.within());
    CHECK(r.threshold == 4.9);
}

TEST_CASE("short-circuit distance: eps must be positive") {
    std::vector<double> a{0}, b{1};
    CHECK_THROWS_AS(short_circuit_distance(a, b, 0.0), UsageError);
    CHECK_THROWS_AS(short_circuit_distance(a, b, -1.0), UsageError);
}

TEST_CASE("short-circuit classification matches the plain distance comparison") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> coord(-3, 3);
    std::uniform_real_distribution<double> eps_pick(0.1, 6.0);
    for (int iter = 0; iter < 20000; ++iter) {
        std::vector<double> a(10), b(10);
        for (auto& v : a) v = coord(rng);
        for (auto& v : b) v = coord(rng);
        double eps = eps_pick(rng);
        bool expect = euclidean_distance(a, b) <= eps;
        auto r = short_circuit_distance(a, b, eps);
        CHECK(r.within() == expect);
        if (r.within()) CHECK(r.distance == euclidean_distance(a, b));
    }
}

TEST_CASE("reorder_by_variance puts high-variance dimensions first") {
    // ranges [0,1] x [0,0.01] x [0.2,0.6]: variance order is dim 0, dim 2, dim 1
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d0(0, 1), d1(0, 0.01), d2(0.2, 0.6);
    std::vector<double> coords;
    for (int i = 0; i < 400; ++i) {
        coords.push_back(d0(rng));
        coords.push_back(d1(rng));
        coords.push_back(d2(rng));
    }
    Dataset d(std::move(coords), 3);
    Dataset r = reorder_by_variance(d, 2);
    CHECK(r.dim_permutation() == std::vector<std::uint32_t>{0, 2, 1});
}

TEST_CASE("reorder_by_variance: m out of range is a usage error") {
    Dataset d({0, 0, 1, 1}, 2);
    CHECK_THROWS_AS(reorder_by_variance(d, 0), UsageError);
    CHECK_THROWS_AS(reorder_by_variance(d, 3), UsageError);
}

TEST_CASE("reorder_by_variance: equal variances keep original order and distances") {
    // every column holds the same integer multiset, so variances tie exactly
    std::vector<double> coords{0, 1, 2, 1, 2, 3, 2, 3, 0, 3, 0, 1};
    Dataset d(std::move(coords), 3);
    Dataset r = reorder_by_variance(d, 3);
    CHECK(r.dim_permutation() == std::vector<std::uint32_t>{0, 1, 2});
    for (PointId a = 0; a < d.size(); ++a)
        for (PointId b = 0; b < d.size(); ++b)
            CHECK(euclidean_distance(d.point_span(a), d.point_span(b)) ==
                  euclidean_distance(r.point_span(a), r.point_span(b)));
}

TEST_CASE("reorder_by_variance: output column variances are non-increasing") {
    auto d = testsupport::random_dataset(300, 5, 23);
    Dataset r = reorder_by_variance(d, 3);

    // independent check: sort the input's column variances descending
    auto var_in = d.column_variances();
    std::vector<double> expect = var_in;
    std::sort(expect.begin(), expect.end(), std::greater<>());

    auto var_out = r.column_variances();
    for (std::size_t j = 0; j + 1 < var_out.size(); ++j) CHECK(var_out[j] >= var_out[j + 1]);
    for (std::size_t j = 0; j < var_out.size(); ++j)
        CHECK(var_out[j] == doctest::Approx(expect[j]).epsilon(1e-12));
}

TEST_CASE("reorder_by_variance preserves distances on integer data exactly") {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> coord(-20, 20);
    std::vector<double> coords;
    for (int i = 0; i < 120 * 6; ++i) coords.push_back(double(coord(rng)));
    Dataset d(std::move(coords), 6);
    Dataset r = reorder_by_variance(d, 4);
    for (PointId a = 0; a < 120; a += 7)
        for (PointId b = 0; b < 120; b += 5)
            CHECK(euclidean_distance(d.point_span(a), d.point_span(b)) ==
                  euclidean_distance(r.point_span(a), r.point_span(b)));
}

TEST_CASE("reorder_by_variance preserves distances on real data within rounding") {
    auto d = testsupport::random_dataset(100, 8, 41);
    Dataset r = reorder_by_variance(d, 8);
    for (PointId a = 0; a < 100; a += 3)
        for (PointId b = 0; b < 100; b += 11) {
            double orig = euclidean_distance(d.point_span(a), d.point_span(b));
            double perm = euclidean_distance(r.point_span(a), r.point_span(b));
            CHECK(perm == doctest::Approx(orig).epsilon(1e-14));
        }
}

TEST_CASE("dim permutation inverts bit-exactly") {
    auto d = testsupport::random_dataset(50, 7, 59);
    Dataset r = reorder_by_variance(d, 7);
    Dataset back = r.with_original_column_order();
    CHECK(back.raw() == d.raw());
}

TEST_CASE("dataset rejects non-finite coordinates") {
    CHECK_THROWS_AS(Dataset({0.0, std::nan("")}, 2), UsageError);
    CHECK_THROWS_AS(Dataset({std::numeric_limits<double>::infinity()}, 1), UsageError);
}
