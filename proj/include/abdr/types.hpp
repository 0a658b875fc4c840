#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "abdr/error.hpp"

namespace abdr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Cluster assignment with labels in {1..k}.
struct LabelVector {
    std::vector<int> labels;
    int k = 0;

    LabelVector() = default;

    /// k is taken as the largest label. Throws on labels < 1.
    explicit LabelVector(std::vector<int> values) : labels(std::move(values)) {
        for (int v : labels) {
            if (v < 1) throw InvalidArgument("labels must be >= 1");
            k = std::max(k, v);
        }
    }

    std::size_t size() const noexcept { return labels.size(); }
    int operator[](std::size_t i) const { return labels[i]; }
    bool operator==(const LabelVector&) const = default;
};

/// splitmix64 step; used to derive independent sub-seeds from one root seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace abdr
