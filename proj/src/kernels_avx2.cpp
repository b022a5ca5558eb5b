#include "knnjoin/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include <limits>

namespace knnjoin::kernels {

namespace {

__attribute__((target("avx2,fma"))) inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    __m128d s = _mm_add_pd(lo, hi);          // (l0+l2, l1+l3)
    __m128d sh = _mm_unpackhi_pd(s, s);      // (l1+l3, l1+l3)
    return _mm_cvtsd_f64(_mm_add_sd(s, sh)); // (l0+l2)+(l1+l3)
}

}  // namespace

// Four lanes with FMA, checkpoint every 16 dimensions. The lane sums and the
// final horizontal reduction use one fixed order, so the finite result does
// not depend on where checkpoints land.
__attribute__((target("avx2,fma"))) double sq_dist_limited_avx2(const double* a,
                                                                const double* b,
                                                                std::size_t n,
                                                                double limit_sq) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    while (i + 16 <= n) {
        for (std::size_t j = 0; j < 16; j += 4) {
            __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i + j), _mm256_loadu_pd(b + i + j));
            acc = _mm256_fmadd_pd(d, d, acc);
        }
        i += 16;
        if (hsum(acc) > limit_sq) return std::numeric_limits<double>::infinity();
    }
    while (i + 4 <= n) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
        i += 4;
    }
    double sum = hsum(acc);
    for (; i < n; ++i) {
        double d = a[i] - b[i];
        sum += d * d;
    }
    if (sum > limit_sq) return std::numeric_limits<double>::infinity();
    return sum;
}

}  // namespace knnjoin::kernels

#endif  // x86
