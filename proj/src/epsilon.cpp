#include "knnjoin/epsilon.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "knnjoin/errors.hpp"
#include "knnjoin/kernels.hpp"
#include "knnjoin/util.hpp"

namespace knnjoin {

double estimate_eps_mean(const Dataset& d, std::uint64_t sample_pairs, std::uint64_t seed) {
    if (d.size() < 2) throw UsageError("eps_mean estimation needs at least two points");
    if (sample_pairs < 1) throw UsageError("sample_pairs must be at least 1");

    const std::uint64_t n_points = d.size();
    const std::size_t dims = d.dims();
    const std::uint64_t all_ordered = n_points * (n_points - 1);

    double sum = 0.0;
    std::uint64_t used = 0;
    if (sample_pairs >= all_ordered) {
        for (std::uint64_t i = 0; i < n_points; ++i) {
            for (std::uint64_t j = 0; j < n_points; ++j) {
                if (i == j) continue;
                sum += std::sqrt(kernels::sq_dist(d.point(PointId(i)), d.point(PointId(j)), dims));
            }
        }
        used = all_ordered;
    } else {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<std::uint64_t> pick(0, n_points - 1);
        for (std::uint64_t s = 0; s < sample_pairs; ++s) {
            std::uint64_t i = pick(rng);
            std::uint64_t j = pick(rng);
            while (j == i) j = pick(rng);
            sum += std::sqrt(kernels::sq_dist(d.point(PointId(i)), d.point(PointId(j)), dims));
        }
        used = sample_pairs;
    }
    return sum / double(used);
}

EpsilonProfile build_distance_histogram(const Dataset& d, double eps_mean, std::size_t n_bins,
                                        double query_fraction, std::uint64_t seed,
                                        unsigned n_threads) {
    if (!(eps_mean > 0.0))
        throw DegenerateProfileError("mean pairwise distance is not positive; "
                                     "cannot build a distance histogram");
    if (n_bins < 2) throw UsageError("histogram needs at least 2 bins");
    if (!(query_fraction > 0.0) || query_fraction > 1.0)
        throw UsageError("query_fraction must be in (0, 1]");

    EpsilonProfile profile;
    profile.eps_mean = eps_mean;
    profile.n_bins = n_bins;
    profile.bin_width = eps_mean / double(n_bins);
    profile.sample_fraction = query_fraction;
    profile.seed = seed;

    const std::uint64_t n_points = d.size();
    std::uint64_t want = std::uint64_t(std::floor(query_fraction * double(n_points)));
    want = std::max<std::uint64_t>(want, 100);
    want = std::min<std::uint64_t>(want, n_points);

    std::mt19937_64 rng(seed);
    std::vector<std::uint64_t> queries = sample_without_replacement(n_points, want, rng);
    profile.query_count = queries.size();

    const std::size_t dims = d.dims();
    const double limit_sq = eps_mean * eps_mean;
    const double inv_width = 1.0 / profile.bin_width;

    unsigned threads = std::max(1u, n_threads);
    std::vector<std::vector<std::uint64_t>> local(threads,
                                                  std::vector<std::uint64_t>(n_bins, 0));
    std::atomic<std::size_t> next{0};
    auto worker = [&](unsigned tid) {
        auto& bins = local[tid];
        for (;;) {
            std::size_t qi = next.fetch_add(1, std::memory_order_relaxed);
            if (qi >= queries.size()) return;
            const double* qp = d.point(PointId(queries[qi]));
            for (std::uint64_t t = 0; t < n_points; ++t) {
                if (t == queries[qi]) continue;
                double sq = kernels::sq_dist_limited(qp, d.point(PointId(t)), dims, limit_sq);
                if (std::isinf(sq)) continue;
                double dist = std::sqrt(sq);
                if (dist >= eps_mean) continue;  // bins tile [0, eps_mean)
                std::size_t b = std::size_t(dist * inv_width);
                if (b >= n_bins) b = n_bins - 1;
                ++bins[b];
            }
        }
    };
    if (threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker, t);
        for (auto& th : pool) th.join();
    }

    // Integer merge, then one normalization: independent of thread count.
    std::vector<std::uint64_t> raw(n_bins, 0);
    for (const auto& l : local)
        for (std::size_t b = 0; b < n_bins; ++b) raw[b] += l[b];

    profile.counts.resize(n_bins);
    profile.cumulative.resize(n_bins);
    std::uint64_t running = 0;
    for (std::size_t b = 0; b < n_bins; ++b) {
        running += raw[b];
        profile.counts[b] = double(raw[b]) / double(profile.query_count);
        profile.cumulative[b] = double(running) / double(profile.query_count);
    }
    return profile;
}

EpsSelection select_eps_beta(const EpsilonProfile& profile, std::size_t k, double beta) {
    if (k < 1) throw UsageError("k must be at least 1");
    if (beta < 0.0 || beta > 1.0) throw UsageError("beta must be in [0, 1]");
    if (profile.cumulative.empty()) throw UsageError("profile has no bins");

    const double target = double(k) + (100.0 * double(k) - double(k)) * beta;
    const auto& cum = profile.cumulative;
    auto it = std::lower_bound(cum.begin(), cum.end(), target);
    if (it == cum.end()) {
        std::ostringstream msg;
        msg << "cumulative neighbor target " << target
            << " is unreachable within eps_mean; achievable maximum is " << cum.back();
        throw TargetUnreachableError(msg.str(), cum.back());
    }
    std::size_t bin = std::size_t(it - cum.begin()) + 1;  // 1-based
    double start = double(bin - 1) * profile.bin_width;
    double end = double(bin) * profile.bin_width;
    double eps_beta = (start + end) / 2.0;
    return {eps_beta, 2.0 * eps_beta, bin};
}

double expected_satisfied_fraction(std::uint64_t dataset_size, std::size_t k,
                                   std::uint64_t extra_per_success) {
    if (dataset_size < 1 || k < 1) throw UsageError("dataset_size and k must be positive");
    return double(k) / double(k + extra_per_success);
}

std::string EpsilonProfile::to_text() const {
    std::ostringstream out;
    out << "eps_mean " << eps_mean << "\n"
        << "n_bins " << n_bins << "\n"
        << "bin_width " << bin_width << "\n"
        << "queries " << query_count << " (fraction " << sample_fraction << ", seed " << seed
        << ")\n"
        << "eps_default " << eps_default << "\n"
        << "beta " << beta << " eps_beta " << eps_beta << " eps_final " << eps_final << "\n"
        << "bin\tstart\tend\tavg_count\tavg_cumulative\n";
    for (std::size_t b = 0; b < n_bins; ++b) {
        out << (b + 1) << '\t' << double(b) * bin_width << '\t' << double(b + 1) * bin_width
            << '\t' << counts[b] << '\t' << cumulative[b] << '\n';
    }
    return out.str();
}

}  // namespace knnjoin
