#pragma once

// From coefficient matrix to partition: W = (|Z| + |Z^T|)/2, block count from
// the connected components of the thresholded W, then normalized spectral
// clustering (symmetric Laplacian, row-normalized embedding, k-means).

#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "abdr/kmeans.hpp"
#include "abdr/solver.hpp"
#include "abdr/types.hpp"

namespace abdr {

/// Symmetric, entrywise nonnegative n x n matrix.
struct AffinityMatrix {
    Matrix W;

    Index n() const noexcept { return W.rows(); }
};

inline AffinityMatrix affinity(const Matrix& Z) {
    if (Z.rows() != Z.cols())
        throw DimensionError("affinity: Z must be square, got " + std::to_string(Z.rows()) + "x" +
                             std::to_string(Z.cols()));
    return {0.5 * (Z.cwiseAbs() + Z.transpose().cwiseAbs())};
}

/// Connected components of the graph with an edge wherever W_ij > rel_threshold * max(W), i != j.
/// An all-zero W yields n.
inline int estimate_block_count(const AffinityMatrix& A, double rel_threshold = 1e-3) {
    if (!(rel_threshold > 0.0 && rel_threshold < 1.0))
        throw InvalidArgument("estimate_block_count: rel_threshold must lie in (0, 1)");
    const Index n = A.n();
    const double cut = rel_threshold * (n > 0 ? A.W.maxCoeff() : 0.0);

    std::vector<Index> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), Index{0});
    auto find = [&](Index x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    int components = int(n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < j; ++i) {
            if (A.W(i, j) > cut || A.W(j, i) > cut) {
                const Index a = find(i), b = find(j);
                if (a != b) {
                    parent[a] = b;
                    --components;
                }
            }
        }
    }
    return components;
}

/// Relabel so that labels appear as 1, 2, ... in order of first occurrence.
inline LabelVector canonical_labels(const std::vector<int>& raw) {
    std::map<int, int> seen;
    std::vector<int> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto [it, inserted] = seen.try_emplace(raw[i], int(seen.size()) + 1);
        out[i] = it->second;
    }
    return LabelVector(std::move(out));
}

/// Ng-Jordan-Weiss spectral clustering into k groups.
inline LabelVector spectral_cluster(const AffinityMatrix& A, int k, std::uint64_t seed,
                                    const KMeansOptions& opt = {}) {
    const Index n = A.n();
    if (k < 1 || k > n) throw InvalidArgument("spectral_cluster: k must lie in [1, n] (k=" + std::to_string(k) + ")");
    if (k == 1) return LabelVector(std::vector<int>(std::size_t(n), 1));

    const Vector inv_sqrt_deg = A.W.rowwise().sum().cwiseMax(1e-12).cwiseSqrt().cwiseInverse();
    const Matrix L = Matrix::Identity(n, n) - inv_sqrt_deg.asDiagonal() * A.W * inv_sqrt_deg.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (L + L.transpose()));
    if (eig.info() != Eigen::Success) throw Error("spectral_cluster: eigendecomposition failed");

    Matrix embedding = eig.eigenvectors().leftCols(k);
    for (Index i = 0; i < n; ++i) {
        const double norm = embedding.row(i).norm();
        if (norm > 0.0) embedding.row(i) /= norm;
    }
    const auto km = kmeans(embedding, k, seed, opt);
    return canonical_labels(km.assignment);
}

struct PipelineResult {
    Matrix Z;
    AffinityMatrix W;
    LabelVector labels;
    int estimated_k = 0;
    SolveTrace trace;
    double alpha = 0.0;
};

/// solve_abdr -> affinity -> block count (when k is nullopt) -> spectral_cluster.
inline PipelineResult cluster_pipeline(const DataMatrix& X, const WeightedGraph& G, const SolverConfig& config,
                                       std::optional<int> k, std::uint64_t seed, double rel_threshold = 1e-3,
                                       const ZSystem* system = nullptr) {
    PipelineResult out;
    auto solved = solve_abdr(X, G, config, system);
    out.Z = std::move(solved.Z);
    out.trace = std::move(solved.trace);
    out.alpha = solved.alpha;
    out.W = affinity(out.Z);
    out.estimated_k = k ? *k : estimate_block_count(out.W, rel_threshold);
    out.labels = spectral_cluster(out.W, out.estimated_k, seed);
    return out;
}

}  // namespace abdr
