#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "abdr/types.hpp"

namespace abdr {

/// counts(p, t): points predicted in cluster p whose truth is cluster t.
/// Rows and columns follow the sorted distinct label values.
struct ContingencyTable {
    Eigen::MatrixXi counts;
    std::size_t n = 0;

    ContingencyTable(const LabelVector& pred, const LabelVector& truth) {
        if (pred.size() != truth.size())
            throw DimensionError("label vectors differ in length (" + std::to_string(pred.size()) + " vs " +
                                 std::to_string(truth.size()) + ")");
        if (pred.size() == 0) throw InvalidArgument("label vectors are empty");
        const auto index_of = [](const LabelVector& v) {
            std::map<int, int> idx;
            for (int l : v.labels) idx.emplace(l, 0);
            int next = 0;
            for (auto& [label, slot] : idx) slot = next++;
            return idx;
        };
        const auto p_idx = index_of(pred);
        const auto t_idx = index_of(truth);
        counts = Eigen::MatrixXi::Zero(Index(p_idx.size()), Index(t_idx.size()));
        for (std::size_t i = 0; i < pred.size(); ++i) ++counts(p_idx.at(pred[i]), t_idx.at(truth[i]));
        n = pred.size();
    }
};

/// Maximum-weight assignment on a nonnegative rows x cols matrix (rows <= cols
/// not required). Returns the optimal total weight. O(m^3) Hungarian method
/// on the square, zero-padded cost matrix.
inline long long max_weight_matching(const Eigen::MatrixXi& weight) {
    const int m = int(std::max(weight.rows(), weight.cols()));
    if (m == 0) return 0;
    const long long top = weight.size() ? weight.maxCoeff() : 0;
    // cost(i, j) = top - weight(i, j); padded cells cost `top`.
    const auto cost = [&](int i, int j) -> long long {
        const bool real = i < weight.rows() && j < weight.cols();
        return top - (real ? weight(i, j) : 0);
    };
    const long long inf = std::numeric_limits<long long>::max() / 4;
    std::vector<long long> u(m + 1, 0), v(m + 1, 0), minv(m + 1);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    std::vector<char> used(m + 1);
    for (int i = 1; i <= m; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            long long delta = inf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const long long cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) minv[j] = cur, way[j] = j0;
                if (minv[j] < delta) delta = minv[j], j1 = j;
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) u[p[j]] += delta, v[j] -= delta;
                else minv[j] -= delta;
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    long long total = 0;
    for (int j = 1; j <= m; ++j) {
        const int i = p[j] - 1;
        if (i < weight.rows() && j - 1 < weight.cols()) total += weight(i, j - 1);
    }
    return total;
}

/// 1 - (best injective matching of predicted to true labels) / n.
/// Unmatched labels, when the cluster counts differ, count as errors.
inline double clustering_error(const LabelVector& pred, const LabelVector& truth) {
    const ContingencyTable table(pred, truth);
    return 1.0 - double(max_weight_matching(table.counts)) / double(table.n);
}

/// Fraction of |Z| mass lying outside the diagonal blocks defined by `truth`.
inline double off_block_mass(const Matrix& Z, const LabelVector& truth) {
    if (Z.rows() != Z.cols() || std::size_t(Z.rows()) != truth.size())
        throw DimensionError("off_block_mass: Z must be n x n with n = " + std::to_string(truth.size()));
    double total = 0.0;
    double off = 0.0;
    for (Index j = 0; j < Z.cols(); ++j) {
        for (Index i = 0; i < Z.rows(); ++i) {
            const double a = std::abs(Z(i, j));
            total += a;
            if (truth[std::size_t(i)] != truth[std::size_t(j)]) off += a;
        }
    }
    return total == 0.0 ? 0.0 : off / total;
}

}  // namespace abdr
