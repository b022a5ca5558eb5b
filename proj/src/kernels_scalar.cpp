#include "knnjoin/kernels.hpp"

#include <limits>

namespace knnjoin::kernels {

// Reference kernel. Single accumulator, strict dimension order, overflow
// check every 8 terms.
double sq_dist_limited_scalar(const double* a, const double* b, std::size_t n,
                              double limit_sq) {
    double sum = 0.0;
    std::size_t i = 0;
    while (i + 8 <= n) {
        for (std::size_t j = 0; j < 8; ++j) {
            double d = a[i + j] - b[i + j];
            sum += d * d;
        }
        i += 8;
        if (sum > limit_sq) return std::numeric_limits<double>::infinity();
    }
    for (; i < n; ++i) {
        double d = a[i] - b[i];
        sum += d * d;
    }
    if (sum > limit_sq) return std::numeric_limits<double>::infinity();
    return sum;
}

}  // namespace knnjoin::kernels
