#pragma once

#include <span>

namespace knnjoin {

double euclidean_distance(std::span<const double> a, std::span<const double> b);

enum class DistanceKind { Within, Exceeded };

struct DistanceOutcome {
    DistanceKind kind;
    double distance;   // valid only when kind == Within
    double threshold;  // the eps the comparison was made against

    bool within() const { return kind == DistanceKind::Within; }
};

// Exact eps classification with early abandonment: Within(d) iff the squared
// distance is <= eps^2, Exceeded otherwise. No distance value is produced in
// the Exceeded case because the scan may have stopped early.
DistanceOutcome short_circuit_distance(std::span<const double> a, std::span<const double> b,
                                       double eps);

}  // namespace knnjoin
