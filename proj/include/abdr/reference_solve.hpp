#pragma once

// Slow subgradient solver for the fusion-penalized self-expression objective.
// Used as a correctness oracle for the GADMM path, so it deliberately shares
// nothing with it beyond the graph's edge list: no incidence products, no
// factorization, and its own elementwise objective evaluation.

#include <cmath>
#include <limits>

#include "abdr/dataset.hpp"
#include "abdr/graph.hpp"
#include "abdr/solver.hpp"

namespace abdr {

namespace oracle {

inline double dense_objective(const Matrix& X, const Matrix& Z, const WeightedGraph& G, double gamma,
                              FusionMode mode) {
    const Index d = X.rows();
    const Index n = X.cols();
    double fidelity = 0.0;
    for (Index c = 0; c < n; ++c) {
        for (Index r = 0; r < d; ++r) {
            double xz = 0.0;
            for (Index m = 0; m < n; ++m) xz += X(r, m) * Z(m, c);
            fidelity += (X(r, c) - xz) * (X(r, c) - xz);
        }
    }
    double omega = 0.0;
    for (const auto& e : G.edges) {
        double col = 0.0;
        double row = 0.0;
        for (Index m = 0; m < n; ++m) {
            col += (Z(m, e.i) - Z(m, e.j)) * (Z(m, e.i) - Z(m, e.j));
            row += (Z(e.i, m) - Z(e.j, m)) * (Z(e.i, m) - Z(e.j, m));
        }
        if (uses_columns(mode)) omega += e.weight * std::sqrt(col);
        if (uses_rows(mode)) omega += e.weight * std::sqrt(row);
    }
    return 0.5 * fidelity + gamma * omega;
}

inline Matrix subgradient(const Matrix& X, const Matrix& Z, const WeightedGraph& G, double gamma, FusionMode mode) {
    Matrix g = -X.transpose() * (X - X * Z);
    for (const auto& e : G.edges) {
        if (uses_columns(mode)) {
            const Vector diff = Z.col(e.i) - Z.col(e.j);
            const double norm = diff.norm();
            if (norm > 0.0) {
                g.col(e.i) += gamma * e.weight / norm * diff;
                g.col(e.j) -= gamma * e.weight / norm * diff;
            }
        }
        if (uses_rows(mode)) {
            const Eigen::RowVectorXd diff = Z.row(e.i) - Z.row(e.j);
            const double norm = diff.norm();
            if (norm > 0.0) {
                g.row(e.i) += gamma * e.weight / norm * diff;
                g.row(e.j) -= gamma * e.weight / norm * diff;
            }
        }
    }
    return g;
}

}  // namespace oracle

/// Subgradient descent from Z = I with step c / sqrt(t), where c makes the
/// first step move Z by 0.1 in Frobenius norm. Returns the best iterate seen.
/// Meant for n <= 20.
inline Matrix reference_solve(const DataMatrix& data, const WeightedGraph& G, double gamma, FusionMode mode,
                              int iterations) {
    const Matrix& X = data.values();
    Matrix Z = Matrix::Identity(data.n(), data.n());
    Matrix best = Z;
    double best_obj = oracle::dense_objective(X, Z, G, gamma, mode);

    const double g0 = oracle::subgradient(X, Z, G, gamma, mode).norm();
    if (g0 == 0.0) return best;
    const double c = 0.1 / g0;
    for (int t = 1; t <= iterations; ++t) {
        const Matrix g = oracle::subgradient(X, Z, G, gamma, mode);
        const double gn = g.norm();
        if (gn == 0.0) break;
        Z -= (c / std::sqrt(double(t))) * g;
        const double obj = oracle::dense_objective(X, Z, G, gamma, mode);
        if (obj < best_obj) {
            best_obj = obj;
            best = Z;
        }
    }
    return best;
}

}  // namespace abdr
