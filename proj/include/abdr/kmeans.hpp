#pragma once

#include <limits>
#include <random>
#include <vector>

#include "abdr/types.hpp"

namespace abdr {

struct KMeansOptions {
    int restarts = 10;
    int max_iter = 300;
};

struct KMeansResult {
    std::vector<int> assignment;  ///< 0-based cluster per row
    Matrix centroids;             ///< k x dim
    double inertia = std::numeric_limits<double>::infinity();
};

namespace detail {

inline Matrix kmeanspp_seed(const Matrix& P, int k, std::mt19937_64& rng) {
    const Index n = P.rows();
    Matrix C(k, P.cols());
    std::uniform_int_distribution<Index> first(0, n - 1);
    C.row(0) = P.row(first(rng));
    Vector nearest = (P.rowwise() - C.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = nearest.sum();
        Index pick = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            pick = n - 1;
            for (Index i = 0; i < n; ++i) {
                target -= nearest(i);
                if (target < 0.0 && nearest(i) > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = first(rng);
        }
        C.row(c) = P.row(pick);
        nearest = nearest.cwiseMin((P.rowwise() - C.row(c)).rowwise().squaredNorm());
    }
    return C;
}

inline KMeansResult lloyd(const Matrix& P, Matrix C, int max_iter) {
    const Index n = P.rows();
    const Index k = C.rows();
    KMeansResult r;
    r.assignment.assign(std::size_t(n), -1);
    for (int it = 0; it < max_iter; ++it) {
        bool changed = false;
        for (Index i = 0; i < n; ++i) {
            Index best = 0;
            (C.rowwise() - P.row(i)).rowwise().squaredNorm().minCoeff(&best);
            if (r.assignment[i] != int(best)) {
                r.assignment[i] = int(best);
                changed = true;
            }
        }
        if (!changed && it > 0) break;

        Matrix sums = Matrix::Zero(k, P.cols());
        std::vector<int> counts(std::size_t(k), 0);
        for (Index i = 0; i < n; ++i) {
            sums.row(r.assignment[i]) += P.row(i);
            ++counts[r.assignment[i]];
        }
        for (Index c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                C.row(c) = sums.row(c) / counts[c];
            } else {
                // Empty cluster: move it to the point farthest from its centroid.
                Index far = 0;
                double far_d = -1.0;
                for (Index i = 0; i < n; ++i) {
                    const double d = (P.row(i) - C.row(r.assignment[i])).squaredNorm();
                    if (d > far_d) far_d = d, far = i;
                }
                C.row(c) = P.row(far);
            }
        }
    }
    r.inertia = 0.0;
    for (Index i = 0; i < n; ++i) r.inertia += (P.row(i) - C.row(r.assignment[i])).squaredNorm();
    r.centroids = std::move(C);
    return r;
}

}  // namespace detail

/// k-means on the rows of P: k-means++ seeding, best inertia over restarts.
/// Restart r draws from mix_seed(seed, r), so results do not depend on order.
inline KMeansResult kmeans(const Matrix& P, int k, std::uint64_t seed, const KMeansOptions& opt = {}) {
    if (k < 1 || k > P.rows()) throw InvalidArgument("kmeans: k must lie in [1, n]");
    KMeansResult best;
    for (int r = 0; r < opt.restarts; ++r) {
        std::mt19937_64 rng(mix_seed(seed, std::uint64_t(r)));
        KMeansResult run = detail::lloyd(P, detail::kmeanspp_seed(P, k, rng), opt.max_iter);
        if (run.inertia < best.inertia) best = std::move(run);
    }
    return best;
}

}  // namespace abdr
