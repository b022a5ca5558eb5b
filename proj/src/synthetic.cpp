#include "knnjoin/synthetic.hpp"

#include <random>
#include <sstream>

#include "knnjoin/errors.hpp"

namespace knnjoin {

SyntheticSpec SyntheticSpec::parse(const std::string& text) {
    SyntheticSpec spec;
    std::stringstream ss(text);
    std::string kind;
    std::getline(ss, kind, ':');
    if (kind == "uniform") {
        spec.kind = Kind::Uniform;
    } else if (kind == "clusters") {
        spec.kind = Kind::GaussianClusters;
    } else if (kind == "mixture") {
        spec.kind = Kind::Mixture;
    } else {
        throw UsageError("unknown synthetic kind '" + kind +
                         "' (expected uniform, clusters, or mixture)");
    }
    std::string field;
    if (std::getline(ss, field, ':') && !field.empty()) spec.clusters = std::stoul(field);
    if (std::getline(ss, field, ':') && !field.empty()) spec.spread = std::stod(field);
    if (spec.clusters < 1) throw UsageError("synthetic spec needs at least one cluster");
    return spec;
}

std::pair<Dataset, std::vector<int>> generate_synthetic_labeled(const SyntheticSpec& spec,
                                                                std::size_t size,
                                                                std::size_t dims,
                                                                std::uint64_t seed) {
    if (size < 2) throw UsageError("synthetic dataset needs at least two points");
    if (dims < 1) throw UsageError("synthetic dataset needs at least one dimension");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<double> coords;
    coords.reserve(size * dims);
    std::vector<int> labels(size, -1);

    auto gen_centers = [&](std::size_t c) {
        std::vector<double> centers(c * dims);
        for (auto& v : centers) v = unit(rng);
        return centers;
    };

    switch (spec.kind) {
        case SyntheticSpec::Kind::Uniform: {
            for (std::size_t i = 0; i < size * dims; ++i) coords.push_back(unit(rng));
            break;
        }
        case SyntheticSpec::Kind::GaussianClusters: {
            std::vector<double> centers = gen_centers(spec.clusters);
            for (std::size_t i = 0; i < size; ++i) {
                std::size_t c = i % spec.clusters;
                labels[i] = int(c);
                for (std::size_t j = 0; j < dims; ++j)
                    coords.push_back(centers[c * dims + j] + spec.spread * gauss(rng));
            }
            break;
        }
        case SyntheticSpec::Kind::Mixture: {
            std::vector<double> centers = gen_centers(spec.clusters);
            const std::size_t dense = std::size_t(double(size) * spec.dense_fraction);
            for (std::size_t i = 0; i < size; ++i) {
                if (i < dense) {
                    std::size_t c = i % spec.clusters;
                    labels[i] = int(c);
                    for (std::size_t j = 0; j < dims; ++j)
                        coords.push_back(centers[c * dims + j] + spec.spread * gauss(rng));
                } else {
                    for (std::size_t j = 0; j < dims; ++j) coords.push_back(unit(rng));
                }
            }
            break;
        }
    }
    return {Dataset(std::move(coords), dims), std::move(labels)};
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::size_t size, std::size_t dims,
                           std::uint64_t seed) {
    return generate_synthetic_labeled(spec, size, dims, seed).first;
}

}  // namespace knnjoin
