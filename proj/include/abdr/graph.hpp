#pragma once

// KNN fusion graph, Gaussian-kernel edge weights and the node-arc incidence
// matrix Q = J - J~ together with the difference operators Z -> ZQ and
// Z -> Q^T Z it induces.

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "abdr/dataset.hpp"
#include "abdr/error.hpp"
#include "abdr/types.hpp"

namespace abdr {

using SparseMatrix = Eigen::SparseMatrix<double>;
using NodePair = std::pair<Index, Index>;

/// Undirected weighted edge, 0-based endpoints with i < j.
struct Edge {
    Index i = 0;
    Index j = 0;
    double weight = 0.0;

    bool operator==(const Edge&) const = default;
};

/// Immutable fusion graph. Column l of `incidence` belongs to `edges[l]`.
struct WeightedGraph {
    Index n = 0;
    std::vector<Edge> edges;
    SparseMatrix incidence;
    int knn_k = 0;
    double phi = 0.0;

    Index edge_count() const noexcept { return Index(edges.size()); }
};

/// Pairwise squared Euclidean distances between columns.
inline Matrix squared_distances(const Matrix& X) {
    const Vector sq = X.colwise().squaredNorm().transpose();
    Matrix D = (-2.0 * X.transpose() * X).colwise() + sq;
    D.rowwise() += sq.transpose();
    D = D.cwiseMax(0.0);
    D.diagonal().setZero();
    return D;
}

/// Symmetrized K-nearest-neighbour pairs (i, j), i < j, sorted lexicographically.
/// A pair is kept when either endpoint is among the other's K nearest; distance
/// ties go to the lower column index.
inline std::vector<NodePair> build_knn_edges(const DataMatrix& X, int K) {
    const Index n = X.n();
    if (K < 1 || K >= n) throw InvalidArgument("K must satisfy 1 <= K < n (K=" + std::to_string(K) +
                                               ", n=" + std::to_string(n) + ")");
    const Matrix D = squared_distances(X.values());

    std::vector<NodePair> pairs;
    pairs.reserve(std::size_t(n) * std::size_t(K));
    std::vector<Index> order(std::size_t(n - 1));
    for (Index i = 0; i < n; ++i) {
        order.clear();
        for (Index j = 0; j < n; ++j)
            if (j != i) order.push_back(j);
        std::partial_sort(order.begin(), order.begin() + K, order.end(), [&](Index a, Index b) {
            return D(i, a) != D(i, b) ? D(i, a) < D(i, b) : a < b;
        });
        for (int r = 0; r < K; ++r) pairs.emplace_back(std::min(i, order[r]), std::max(i, order[r]));
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    return pairs;
}

/// Kernel bandwidth picked by the median heuristic: 1 / (2 * median of the
/// squared edge lengths). Zero-length edges are ignored; with none left the
/// result is 0 (uniform weights).
inline double auto_phi(const DataMatrix& X, const std::vector<NodePair>& pairs) {
    std::vector<double> sq;
    sq.reserve(pairs.size());
    for (const auto& [i, j] : pairs) {
        const double d = (X.values().col(i) - X.values().col(j)).squaredNorm();
        if (d > 0.0) sq.push_back(d);
    }
    if (sq.empty()) return 0.0;
    const std::size_t mid = sq.size() / 2;
    std::nth_element(sq.begin(), sq.begin() + mid, sq.end());
    double median = sq[mid];
    if (sq.size() % 2 == 0) median = 0.5 * (median + *std::max_element(sq.begin(), sq.begin() + mid));
    return 1.0 / (2.0 * median);
}

/// w_ij = exp(-phi * ||X_i - X_j||^2); edges whose weight underflows to 0 are dropped.
inline std::vector<Edge> compute_weights(const DataMatrix& X, const std::vector<NodePair>& pairs, double phi) {
    if (phi < 0.0 || !std::isfinite(phi)) throw InvalidArgument("phi must be finite and nonnegative");
    std::vector<Edge> edges;
    edges.reserve(pairs.size());
    for (const auto& [i, j] : pairs) {
        const double w = std::exp(-phi * (X.values().col(i) - X.values().col(j)).squaredNorm());
        if (w > 0.0) edges.push_back({i, j, w});
    }
    return edges;
}

/// n x |E| incidence matrix: +1 at row i, -1 at row j for each edge.
inline SparseMatrix build_incidence(const std::vector<Edge>& edges, Index n) {
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(2 * edges.size());
    for (std::size_t l = 0; l < edges.size(); ++l) {
        const auto& e = edges[l];
        if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n)
            throw InvalidArgument("edge " + std::to_string(l + 1) + " has an endpoint outside 1.." + std::to_string(n));
        entries.emplace_back(e.i, Index(l), 1.0);
        entries.emplace_back(e.j, Index(l), -1.0);
    }
    SparseMatrix Q(n, Index(edges.size()));
    Q.setFromTriplets(entries.begin(), entries.end());
    return Q;
}

/// KNN graph over the columns of X. `phi` of nullopt selects auto_phi.
inline WeightedGraph build_graph(const DataMatrix& X, int K, std::optional<double> phi = std::nullopt) {
    const auto pairs = build_knn_edges(X, K);
    WeightedGraph G;
    G.n = X.n();
    G.knn_k = K;
    G.phi = phi ? *phi : auto_phi(X, pairs);
    G.edges = compute_weights(X, pairs, G.phi);
    G.incidence = build_incidence(G.edges, G.n);
    return G;
}

/// Graph from an explicit edge list (tests, external graphs).
inline WeightedGraph make_graph(Index n, std::vector<Edge> edges) {
    WeightedGraph G;
    G.n = n;
    G.incidence = build_incidence(edges, n);
    G.edges = std::move(edges);
    return G;
}

namespace detail {
inline void require_square(const Matrix& Z, const WeightedGraph& G, const char* what) {
    if (Z.rows() != G.n || Z.cols() != G.n)
        throw DimensionError(std::string(what) + ": expected " + std::to_string(G.n) + "x" + std::to_string(G.n) +
                             " matrix, got " + std::to_string(Z.rows()) + "x" + std::to_string(Z.cols()));
}
}  // namespace detail

/// ZQ: column l is Z_{.i} - Z_{.j}.
inline Matrix col_diffs(const Matrix& Z, const WeightedGraph& G) {
    detail::require_square(Z, G, "col_diffs");
    Matrix out(G.n, G.edge_count());
    for (Index l = 0; l < G.edge_count(); ++l) out.col(l) = Z.col(G.edges[l].i) - Z.col(G.edges[l].j);
    return out;
}

/// Q^T Z: row l is Z_{i.} - Z_{j.}.
inline Matrix row_diffs(const Matrix& Z, const WeightedGraph& G) {
    detail::require_square(Z, G, "row_diffs");
    Matrix out(G.edge_count(), G.n);
    for (Index l = 0; l < G.edge_count(); ++l) out.row(l) = Z.row(G.edges[l].i) - Z.row(G.edges[l].j);
    return out;
}

/// M Q^T for an n x |E| matrix M (adjoint of col_diffs).
inline Matrix scatter_cols(const Matrix& M, const WeightedGraph& G) {
    Matrix out = Matrix::Zero(G.n, G.n);
    for (Index l = 0; l < G.edge_count(); ++l) {
        out.col(G.edges[l].i) += M.col(l);
        out.col(G.edges[l].j) -= M.col(l);
    }
    return out;
}

/// Q M for an |E| x n matrix M (adjoint of row_diffs).
inline Matrix scatter_rows(const Matrix& M, const WeightedGraph& G) {
    Matrix out = Matrix::Zero(G.n, G.n);
    for (Index l = 0; l < G.edge_count(); ++l) {
        out.row(G.edges[l].i) += M.row(l);
        out.row(G.edges[l].j) -= M.row(l);
    }
    return out;
}

/// sigma_max(Q), via the largest eigenvalue of the graph Laplacian Q Q^T.
/// Returns 0 for an edgeless graph.
inline double largest_singular_value(const SparseMatrix& Q) {
    if (Q.cols() == 0 || Q.rows() == 0) return 0.0;
    const Matrix L = Matrix(Q * Q.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(L, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

}  // namespace abdr
