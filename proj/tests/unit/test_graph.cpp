#include <cmath>

#include <gtest/gtest.h>

#include "abdr/graph.hpp"
#include "test_util.hpp"

namespace abdr {
namespace {

using testing::dense_incidence;
using testing::random_graph;
using testing::random_matrix;

// Points on the horizontal line y = 1; the constant row keeps every column
// nonzero without changing pairwise distances.
DataMatrix points_on_line(std::initializer_list<double> xs) {
    Matrix X = Matrix::Ones(2, Index(xs.size()));
    Index j = 0;
    for (double x : xs) X(0, j++) = x;
    return DataMatrix(X);
}

TEST(Knn, CollinearPointsHandEnumerated) {
    // Distances: d(1,2) = 1, d(1,3) = 10, d(2,3) = 9.
    const auto pairs = build_knn_edges(points_on_line({0.0, 1.0, 10.0}), 1);
    EXPECT_EQ(pairs, (std::vector<NodePair>{{0, 1}, {1, 2}}));
}

TEST(Knn, FullNeighbourhoodIsCompleteGraph) {
    std::mt19937_64 rng(1);
    const DataMatrix X(random_matrix(3, 9, rng));
    EXPECT_EQ(build_knn_edges(X, 8).size(), 9u * 8u / 2u);
}

TEST(Knn, DuplicateColumnsAreNeighbours) {
    const auto pairs = build_knn_edges(points_on_line({5.0, 0.0, 5.0, 20.0}), 1);
    EXPECT_NE(std::find(pairs.begin(), pairs.end(), NodePair{0, 2}), pairs.end());
}

TEST(Knn, TiesGoToLowerIndex) {
    // Node 1 is equidistant from 0 and 2.
    const auto pairs = build_knn_edges(points_on_line({-1.0, 0.0, 1.0}), 1);
    EXPECT_EQ(pairs, (std::vector<NodePair>{{0, 1}, {1, 2}}));
    const auto lone = build_knn_edges(points_on_line({0.0, 1.0, 2.0, 30.0}), 1);
    // 1 picks 0 (tie with 2), 2 picks 1, 3 picks 2.
    EXPECT_EQ(lone, (std::vector<NodePair>{{0, 1}, {1, 2}, {2, 3}}));
}

TEST(Knn, RejectsOutOfRangeK) {
    const auto X = points_on_line({0.0, 1.0, 2.0});
    EXPECT_THROW(build_knn_edges(X, 0), InvalidArgument);
    EXPECT_THROW(build_knn_edges(X, 3), InvalidArgument);
}

TEST(Knn, CanonicalSortedAndDeterministic) {
    std::mt19937_64 rng(2);
    const DataMatrix X(random_matrix(4, 25, rng));
    const auto a = build_knn_edges(X, 4);
    EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
    for (const auto& [i, j] : a) EXPECT_LT(i, j);
    EXPECT_EQ(a, build_knn_edges(X, 4));
    const auto G1 = build_graph(X, 4);
    const auto G2 = build_graph(X, 4);
    EXPECT_EQ(G1.edges, G2.edges);
    EXPECT_EQ(G1.phi, G2.phi);
}

TEST(Weights, PhiZeroIsUniform) {
    std::mt19937_64 rng(3);
    const DataMatrix X(random_matrix(3, 10, rng));
    for (const auto& e : compute_weights(X, build_knn_edges(X, 3), 0.0)) EXPECT_EQ(e.weight, 1.0);
}

TEST(Weights, IdenticalColumnsWeighOne) {
    const auto X = points_on_line({2.0, 2.0, 7.0});
    const auto edges = compute_weights(X, {{0, 1}}, 123.0);
    ASSERT_EQ(edges.size(), 1u);
    EXPECT_EQ(edges[0].weight, 1.0);
}

TEST(Weights, LnTwoHalves) {
    const auto X = points_on_line({0.0, std::sqrt(std::log(2.0))});
    const auto edges = compute_weights(X, {{0, 1}}, 1.0);
    EXPECT_NEAR(edges[0].weight, 0.5, 1e-15);
}

TEST(Weights, UnderflowingEdgesAreDropped) {
    const auto X = points_on_line({0.0, 100.0, 100.5});
    const auto edges = compute_weights(X, {{0, 1}, {1, 2}}, 1.0);
    ASSERT_EQ(edges.size(), 1u);
    EXPECT_EQ(edges[0].i, 1);
}

TEST(Weights, AutoPhiIsMedianHeuristic) {
    // Squared edge lengths 1, 4, 9 -> median 4 -> phi = 1/8.
    const auto X = points_on_line({0.0, 1.0, 3.0, 6.0});
    EXPECT_DOUBLE_EQ(auto_phi(X, {{0, 1}, {1, 2}, {2, 3}}), 0.125);
    // Zero-length edges are ignored; nothing left gives uniform weights.
    EXPECT_EQ(auto_phi(points_on_line({1.0, 1.0}), {{0, 1}}), 0.0);
}

TEST(Incidence, TwoEdges) {
    const auto Q = Matrix(build_incidence({{0, 1, 1.0}, {0, 2, 1.0}}, 3));
    Matrix expected(3, 2);
    expected << 1, 1, -1, 0, 0, -1;
    EXPECT_EQ(Q, expected);
}

TEST(Incidence, EmptyAndSingle) {
    EXPECT_EQ(build_incidence({}, 3).rows(), 3);
    EXPECT_EQ(build_incidence({}, 3).cols(), 0);
    const auto Q = Matrix(build_incidence({{1, 2, 0.5}}, 3));
    EXPECT_EQ(Q, (Vector(3) << 0, 1, -1).finished());
}

TEST(Incidence, EndpointOutOfRange) { EXPECT_THROW(build_incidence({{0, 3, 1.0}}, 3), InvalidArgument); }

TEST(Incidence, StructureMatchesEdgeOrder) {
    std::mt19937_64 rng(4);
    const auto G = random_graph(8, rng);
    const Matrix Q(G.incidence);
    EXPECT_LE(Q.colwise().sum().cwiseAbs().maxCoeff(), 0.0);
    for (Index l = 0; l < G.edge_count(); ++l) {
        EXPECT_EQ(Q(G.edges[l].i, l), 1.0);
        EXPECT_EQ(Q(G.edges[l].j, l), -1.0);
        EXPECT_EQ(Q.col(l).cwiseAbs().sum(), 2.0);
    }
}

TEST(Diffs, IdentityOneEdge) {
    const auto G = make_graph(2, {{0, 1, 1.0}});
    EXPECT_EQ(col_diffs(Matrix::Identity(2, 2), G), (Matrix(2, 1) << 1, -1).finished());
    EXPECT_EQ(row_diffs(Matrix::Identity(2, 2), G), (Matrix(1, 2) << 1, -1).finished());
}

TEST(Diffs, EqualColumnsAndRowsGiveZero) {
    const auto G = make_graph(3, {{0, 2, 1.0}});
    Matrix Z(3, 3);
    Z << 1, 5, 1, 2, 6, 2, 3, 7, 3;
    EXPECT_EQ(col_diffs(Z, G).norm(), 0.0);
    Matrix R = Z.transpose();
    EXPECT_EQ(row_diffs(R, G).norm(), 0.0);
}

TEST(Diffs, MatchElementwiseSubtractionOracle) {
    std::mt19937_64 rng(5);
    const auto G = make_graph(3, {{0, 1, 1.0}, {0, 2, 1.0}});
    const Matrix Z = random_matrix(3, 3, rng);
    const Matrix C = col_diffs(Z, G);
    const Matrix R = row_diffs(Z, G);
    for (Index l = 0; l < 2; ++l) {
        for (Index m = 0; m < 3; ++m) {
            EXPECT_EQ(C(m, l), Z(m, G.edges[l].i) - Z(m, G.edges[l].j));
            EXPECT_EQ(R(l, m), Z(G.edges[l].i, m) - Z(G.edges[l].j, m));
        }
    }
}

TEST(Diffs, AgreeWithDenseProductsAndAdjoints) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const auto G = random_graph(7, rng);
        const Matrix Q = dense_incidence(G);
        const Matrix Z = random_matrix(7, 7, rng);
        EXPECT_LE((col_diffs(Z, G) - Z * Q).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LE((row_diffs(Z, G) - Q.transpose() * Z).cwiseAbs().maxCoeff(), 1e-12);
        // Transpose duality: ZQ = (Q^T Z^T)^T.
        EXPECT_LE((col_diffs(Z, G) - row_diffs(Z.transpose(), G).transpose()).cwiseAbs().maxCoeff(), 1e-12);
        const Matrix M = random_matrix(7, G.edge_count(), rng);
        const Matrix N = random_matrix(G.edge_count(), 7, rng);
        EXPECT_LE((scatter_cols(M, G) - M * Q.transpose()).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LE((scatter_rows(N, G) - Q * N).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Diffs, ConstantRowsHaveNoRowDifferences) {
    std::mt19937_64 rng(7);
    const auto G = random_graph(6, rng);
    const Eigen::RowVectorXd r = random_matrix(1, 6, rng);
    const Matrix Z = Matrix::Ones(6, 1) * r;
    EXPECT_LE(row_diffs(Z, G).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Diffs, DimensionMismatch) {
    const auto G = make_graph(3, {{0, 1, 1.0}});
    EXPECT_THROW(col_diffs(Matrix::Identity(2, 2), G), DimensionError);
    EXPECT_THROW(row_diffs(Matrix::Identity(4, 4), G), DimensionError);
}

TEST(SingularValue, HandDerivedCases) {
    EXPECT_NEAR(largest_singular_value(build_incidence({{0, 1, 1.0}}, 2)), std::sqrt(2.0), 1e-10 * std::sqrt(2.0));
    // Path on 3 nodes: Laplacian spectrum {0, 1, 3}.
    EXPECT_NEAR(largest_singular_value(build_incidence({{0, 1, 1.0}, {1, 2, 1.0}}, 3)), std::sqrt(3.0),
                1e-10 * std::sqrt(3.0));
    EXPECT_EQ(largest_singular_value(build_incidence({}, 4)), 0.0);
}

TEST(SingularValue, MatchesJacobiSvd) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const auto G = random_graph(9, rng);
        const Matrix Q = dense_incidence(G);
        const double expected = Eigen::JacobiSVD<Matrix>(Q).singularValues()(0);
        EXPECT_NEAR(largest_singular_value(G.incidence), expected, 1e-10 * expected);
    }
}

}  // namespace
}  // namespace abdr
