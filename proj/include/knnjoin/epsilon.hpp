#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "knnjoin/dataset.hpp"

namespace knnjoin {

// Sampled pairwise-distance histogram used to pick the dense-engine search
// radius. Bin d (1-based) covers [(d-1)*w, d*w) with w = eps_mean / n_bins;
// distances >= eps_mean are discarded. counts and cumulative are per-query
// averages so cumulative[d] is directly comparable to K.
struct EpsilonProfile {
    double eps_mean = 0.0;
    std::size_t n_bins = 0;
    double bin_width = 0.0;
    std::vector<double> counts;      // B_d^n / #queries
    std::vector<double> cumulative;  // B_d^c / #queries
    double sample_fraction = 0.0;    // fraction of points used as histogram queries
    std::size_t query_count = 0;
    std::uint64_t seed = 0;

    // filled in by selection
    double eps_default = 0.0;
    double beta = 0.0;
    double eps_beta = 0.0;
    double eps_final = 0.0;

    std::string to_text() const;
};

// Mean Euclidean distance over sample_pairs random ordered pairs (i != j).
// When sample_pairs covers every ordered pair the sweep is exhaustive
// instead of sampled.
double estimate_eps_mean(const Dataset& d, std::uint64_t sample_pairs, std::uint64_t seed);

// Bins the distances from a seeded sample of query points to every other
// point. query_fraction of |D| queries are used, floored at 100 (clamped to
// |D|). Thread-parallel over queries with an integer-bin reduction, so the
// result does not depend on n_threads.
EpsilonProfile build_distance_histogram(const Dataset& d, double eps_mean, std::size_t n_bins,
                                        double query_fraction, std::uint64_t seed,
                                        unsigned n_threads = 1);

struct EpsSelection {
    double eps_beta;
    double eps_final;  // always exactly 2 * eps_beta
    std::size_t bin;   // 1-based bin index selected
};

// Smallest bin whose cumulative average neighbor count reaches
// K + (100K - K) * beta; eps_beta is that bin's midpoint and the final
// search radius is 2 * eps_beta (the eps_beta ball is circumscribed by a
// grid cell). Throws TargetUnreachableError carrying the achievable maximum
// when even the last bin falls short.
EpsSelection select_eps_beta(const EpsilonProfile& profile, std::size_t k, double beta);

// Fraction of points that satisfy the KNN query in the fixed-budget model
// |R| = |D| * (K+1) with two populations: failures return only themselves,
// successes return K + 1 + extra_per_success results. Reporting aid only.
double expected_satisfied_fraction(std::uint64_t dataset_size, std::size_t k,
                                   std::uint64_t extra_per_success);

}  // namespace knnjoin
