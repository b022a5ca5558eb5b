#include "knnjoin/kernels.hpp"

#include <atomic>
#include <vector>

namespace knnjoin::kernels {

double sq_dist_limited_scalar(const double* a, const double* b, std::size_t n,
                              double limit_sq);

#if defined(__x86_64__) || defined(__i386__)
double sq_dist_limited_avx2(const double* a, const double* b, std::size_t n,
                            double limit_sq);
#endif

namespace {

std::vector<DistanceKernel> detect_kernels() {
    std::vector<DistanceKernel> ks;
    ks.push_back({"scalar", &sq_dist_limited_scalar});
#if defined(__x86_64__) || defined(__i386__)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        ks.push_back({"avx2", &sq_dist_limited_avx2});
    }
#endif
    return ks;
}

const std::vector<DistanceKernel>& kernel_table() {
    static const std::vector<DistanceKernel> table = detect_kernels();
    return table;
}

std::atomic<const DistanceKernel*>& active_slot() {
    // Last entry is the widest variant the CPU supports.
    static std::atomic<const DistanceKernel*> slot{&kernel_table().back()};
    return slot;
}

}  // namespace

std::span<const DistanceKernel> available_kernels() {
    return kernel_table();
}

const DistanceKernel& active_kernel() {
    return *active_slot().load(std::memory_order_relaxed);
}

bool set_active_kernel(std::string_view name) {
    if (name == "auto") {
        active_slot().store(&kernel_table().back(), std::memory_order_relaxed);
        return true;
    }
    for (const auto& k : kernel_table()) {
        if (name == k.name) {
            active_slot().store(&k, std::memory_order_relaxed);
            return true;
        }
    }
    return false;
}

}  // namespace knnjoin::kernels
