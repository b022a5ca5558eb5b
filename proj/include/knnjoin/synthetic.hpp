#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "knnjoin/dataset.hpp"

namespace knnjoin {

// Desk-scale dataset generators. Mixture combines tight clusters with a
// uniform background so a run exercises both the dense and sparse paths.
struct SyntheticSpec {
    enum class Kind { Uniform, GaussianClusters, Mixture };
    Kind kind = Kind::Uniform;
    std::size_t clusters = 3;   // GaussianClusters / Mixture
    double spread = 0.05;       // cluster standard deviation
    double dense_fraction = 0.7;  // Mixture: share of points inside clusters

    static SyntheticSpec parse(const std::string& text);  // "uniform", "clusters:3:0.05", "mixture"
};

Dataset generate_synthetic(const SyntheticSpec& spec, std::size_t size, std::size_t dims,
                           std::uint64_t seed);

// Same, with the generating cluster per point (-1 = uniform background).
std::pair<Dataset, std::vector<int>> generate_synthetic_labeled(const SyntheticSpec& spec,
                                                                std::size_t size,
                                                                std::size_t dims,
                                                                std::uint64_t seed);

}  // namespace knnjoin
