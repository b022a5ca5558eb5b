#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string_view>

namespace knnjoin::kernels {

// Squared Euclidean distance over n dimensions, abandoning the scan as soon
// as the running sum exceeds limit_sq (returns +inf in that case). Squared
// differences are non-negative, so the running sum is monotone and early
// exit never changes the within/exceeded classification. When the result is
// finite it is bit-identical to the same variant called with limit_sq = +inf:
// each variant accumulates in one fixed order and only adds checkpoints.
using SqDistLimitedFn = double (*)(const double* a, const double* b, std::size_t n,
                                   double limit_sq);

struct DistanceKernel {
    const char* name;
    SqDistLimitedFn sq_dist_limited;
};

// All kernels usable on this machine; index 0 is the scalar reference.
std::span<const DistanceKernel> available_kernels();

// The kernel every engine routes through. Selected once at startup (best
// available variant); override with set_active_kernel for tests and the
// CLI --kernel flag.
const DistanceKernel& active_kernel();
bool set_active_kernel(std::string_view name);

inline double sq_dist_limited(const double* a, const double* b, std::size_t n,
                              double limit_sq) {
    return active_kernel().sq_dist_limited(a, b, n, limit_sq);
}

inline double sq_dist(const double* a, const double* b, std::size_t n) {
    return active_kernel().sq_dist_limited(a, b, n, std::numeric_limits<double>::infinity());
}

}  // namespace knnjoin::kernels
