#include <cmath>
#include <functional>
#include <limits>

#include <gtest/gtest.h>

#include "abdr/dataset.hpp"
#include "abdr/solver.hpp"
#include "test_util.hpp"

namespace abdr {
namespace {

using testing::dense_incidence;
using testing::random_graph;
using testing::random_matrix;

// Z-subproblem objective f(Z) + Xi(Z - Zk) evaluated densely from its definition.
double z_subproblem(const Matrix& X, const Matrix& Q, const SolverState& s, const SolverConfig& cfg, double alpha,
                    const Matrix& Z) {
    const Matrix V1t = s.V1 - s.Lambda / cfg.mu1;
    const Matrix V2t = s.V2 - s.Psi / cfg.mu2;
    const Matrix D = Z - s.Z;
    const double f = 0.5 * (X - X * Z).squaredNorm() + 0.5 * cfg.mu1 * (Z * Q - V1t).squaredNorm() +
                     0.5 * cfg.mu2 * (Q.transpose() * Z - V2t).squaredNorm();
    const double xi = 0.5 * (alpha * D.squaredNorm() - cfg.mu1 * (D * Q).squaredNorm() -
                             cfg.mu2 * (Q.transpose() * D).squaredNorm());
    return f + xi;
}

Matrix fd_gradient(const std::function<double(const Matrix&)>& F, const Matrix& Z, double h = 1e-6) {
    Matrix g(Z.rows(), Z.cols());
    for (Index j = 0; j < Z.cols(); ++j) {
        for (Index i = 0; i < Z.rows(); ++i) {
            Matrix P = Z, M = Z;
            P(i, j) += h;
            M(i, j) -= h;
            g(i, j) = (F(P) - F(M)) / (2 * h);
        }
    }
    return g;
}

struct RandomInstance {
    DataMatrix X;
    WeightedGraph G;
    SolverState state;
};

RandomInstance random_instance(std::mt19937_64& rng, Index d, Index n) {
    RandomInstance inst{DataMatrix(random_matrix(d, n, rng)), random_graph(n, rng), {}};
    inst.state.Z = random_matrix(n, n, rng);
    inst.state.V1 = random_matrix(n, inst.G.edge_count(), rng);
    inst.state.V2 = random_matrix(inst.G.edge_count(), n, rng);
    inst.state.Lambda = random_matrix(n, inst.G.edge_count(), rng);
    inst.state.Psi = random_matrix(inst.G.edge_count(), n, rng);
    return inst;
}

TEST(Objective, GammaZeroIdentityIsZero) {
    const auto ds = gen_example1(0);
    const auto G = build_graph(ds.data, 5);
    EXPECT_EQ(objective(ds.data, Matrix::Identity(30, 30), G, 0.0), 0.0);
}

TEST(Objective, IdentityWithUnitWeights) {
    const auto ds = gen_example2(1);
    const auto G = build_graph(ds.data, 4, 0.0);
    const double expected = 2.0 * std::sqrt(2.0) * double(G.edge_count());
    EXPECT_NEAR(objective(ds.data, Matrix::Identity(30, 30), G, 1.0), expected, 1e-12 * expected);
}

TEST(Objective, ConstantMatrixHasNoPenalty) {
    const auto ds = gen_example1(2);
    const auto G = build_graph(ds.data, 6);
    const Matrix Z = Matrix::Constant(30, 30, 0.3);
    const double fid = 0.5 * (ds.data.values() - ds.data.values() * Z).squaredNorm();
    EXPECT_DOUBLE_EQ(objective(ds.data, Z, G, 5.0), fid);
}

TEST(Objective, ModeAdditivity) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 10; ++t) {
        auto inst = random_instance(rng, 3, 6);
        const Matrix& Z = inst.state.Z;
        const double both = objective(inst.X, Z, inst.G, 0.7, FusionMode::both);
        const double col = objective(inst.X, Z, inst.G, 0.7, FusionMode::column_only);
        const double row_pen = 0.7 * fusion_penalty(Z, inst.G, FusionMode::row_only);
        EXPECT_NEAR(both, col + row_pen, 1e-12 * both);
    }
}

TEST(Objective, ConvexityWitness) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int t = 0; t < 50; ++t) {
        auto inst = random_instance(rng, 4, 5);
        const Matrix Z1 = random_matrix(5, 5, rng);
        const Matrix Z2 = random_matrix(5, 5, rng);
        const double theta = u(rng);
        for (auto mode : {FusionMode::both, FusionMode::column_only, FusionMode::row_only}) {
            const double mid = objective(inst.X, theta * Z1 + (1 - theta) * Z2, inst.G, 0.9, mode);
            const double avg = theta * objective(inst.X, Z1, inst.G, 0.9, mode) +
                               (1 - theta) * objective(inst.X, Z2, inst.G, 0.9, mode);
            EXPECT_LE(mid, avg + 1e-9);
        }
    }
}

TEST(Objective, DimensionMismatch) {
    const auto ds = gen_example1(0);
    const auto G = make_graph(5, {{0, 1, 1.0}});
    EXPECT_THROW(objective(ds.data, Matrix::Identity(5, 5), G, 1.0), DimensionError);
}

TEST(BlockSoftThreshold, HandExample) {
    const Vector out = block_soft_threshold(Eigen::Vector2d(3, 4), 2.5);
    EXPECT_NEAR(out(0), 1.5, 1e-15);
    EXPECT_NEAR(out(1), 2.0, 1e-15);
}

TEST(BlockSoftThreshold, FullShrinkageAndIdentity) {
    EXPECT_EQ(block_soft_threshold(Eigen::Vector2d(3, 4), 5.0), Vector::Zero(2));
    EXPECT_EQ(block_soft_threshold(Eigen::Vector2d(3, 4), 7.0), Vector::Zero(2));
    EXPECT_EQ(block_soft_threshold(Eigen::Vector2d(3, 4), 0.0), Eigen::Vector2d(3, 4));
    EXPECT_EQ(block_soft_threshold(Eigen::Vector2d(0, 0), 0.0), Vector::Zero(2));
    EXPECT_THROW(block_soft_threshold(Eigen::Vector2d(1, 1), -1.0), InvalidArgument);
}

TEST(BlockSoftThreshold, ScaleCovariance) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> pos(0.01, 10.0);
    for (int t = 0; t < 200; ++t) {
        const Vector u = random_matrix(6, 1, rng);
        const double tau = pos(rng) * 0.5;
        const double c = pos(rng);
        const Vector lhs = block_soft_threshold(c * u, c * tau);
        const Vector rhs = c * block_soft_threshold(u, tau);
        EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12 * (1 + rhs.norm()));
    }
}

TEST(ChooseAlpha, SingleEdge) {
    const auto G = make_graph(2, {{0, 1, 1.0}});
    EXPECT_NEAR(choose_alpha(G, 1.0, 1.0), 4.04, 1e-12);
}

TEST(ChooseAlpha, EmptyGraphFloorAndLinearity) {
    EXPECT_EQ(choose_alpha(make_graph(4, {}), 1.0, 1.0), 1e-8);
    std::mt19937_64 rng(14);
    const auto G = random_graph(8, rng);
    EXPECT_NEAR(choose_alpha(G, 2.0, 1.2), 2.0 * choose_alpha(G, 1.0, 0.6), 1e-12);
    EXPECT_THROW(choose_alpha(G, 0.0, 1.0), InvalidArgument);
}

TEST(ChooseAlpha, MajorizerIsPositiveDefinite) {
    std::mt19937_64 rng(15);
    for (int t = 0; t < 20; ++t) {
        const auto G = random_graph(7, rng);
        const Matrix Q = dense_incidence(G);
        const double alpha = choose_alpha(G, 1.3, 0.4);
        const Matrix D = random_matrix(7, 7, rng);
        const double xi = alpha * D.squaredNorm() - 1.3 * (D * Q).squaredNorm() - 0.4 * (Q.transpose() * D).squaredNorm();
        EXPECT_GT(xi, 0.0);
    }
}

TEST(UpdateZ, StationaryPointIsFixed) {
    const auto ds = gen_example2(0);
    const auto G = build_graph(ds.data, 5);
    SolverConfig cfg;
    cfg.gamma = 0.0;
    const ZSystem sys(ds.data, choose_alpha(G, cfg.mu1, cfg.mu2));
    const SolverState s = SolverState::initial(G);  // Z = I satisfies XZ = X
    const Matrix Z = update_z(s, G, cfg, sys);
    EXPECT_LE((Z - Matrix::Identity(30, 30)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(UpdateZ, FiniteDifferenceGradientVanishes) {
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> mu(0.3, 2.0);
    for (int t = 0; t < 20; ++t) {
        auto inst = random_instance(rng, 3, 4);
        SolverConfig cfg;
        cfg.mu1 = mu(rng);
        cfg.mu2 = mu(rng);
        const double alpha = choose_alpha(inst.G, cfg.mu1, cfg.mu2);
        const ZSystem sys(inst.X, alpha);
        const Matrix Q = dense_incidence(inst.G);
        const Matrix Z = update_z(inst.state, inst.G, cfg, sys);
        const auto F = [&](const Matrix& M) { return z_subproblem(inst.X.values(), Q, inst.state, cfg, alpha, M); };
        const double g_new = fd_gradient(F, Z).norm();
        const double g_old = fd_gradient(F, inst.state.Z).norm();
        EXPECT_LE(g_new, 1e-5 * (1 + g_old)) << "instance " << t;
        // Minimizer of a strictly convex quadratic: random perturbations never decrease F.
        for (int p = 0; p < 5; ++p) EXPECT_GE(F(Z + 1e-3 * random_matrix(4, 4, rng)), F(Z) - 1e-12);
    }
}

TEST(UpdateZ, EmptyGraphIsDampedRidge) {
    std::mt19937_64 rng(17);
    const DataMatrix X(random_matrix(7, 5, rng));
    const auto G = make_graph(5, {});
    SolverConfig cfg;
    const double alpha = choose_alpha(G, 1, 1);
    const ZSystem sys(X, alpha);
    SolverState s = SolverState::initial(G);
    s.Z = random_matrix(5, 5, rng);
    const Matrix XtX = X.values().transpose() * X.values();
    const Matrix expected = (XtX + alpha * Matrix::Identity(5, 5)).inverse() * (XtX + alpha * s.Z);
    EXPECT_LE((update_z(s, G, cfg, sys) - expected).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(UpdateV, GammaZeroIsPlainShift) {
    std::mt19937_64 rng(18);
    auto inst = random_instance(rng, 3, 6);
    SolverConfig cfg;
    cfg.gamma = 0.0;
    cfg.mu1 = 2.0;
    cfg.mu2 = 0.5;
    const Matrix V1 = update_v1(inst.state, inst.G, cfg);
    const Matrix V2 = update_v2(inst.state, inst.G, cfg);
    EXPECT_LE((V1 - (col_diffs(inst.state.Z, inst.G) + inst.state.Lambda / 2.0)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((V2 - (row_diffs(inst.state.Z, inst.G) + inst.state.Psi / 0.5)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(UpdateV, LargeGammaZeroesEverything) {
    std::mt19937_64 rng(19);
    auto inst = random_instance(rng, 3, 6);
    SolverConfig cfg;
    cfg.gamma = 1e6;
    EXPECT_EQ(update_v1(inst.state, inst.G, cfg).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(update_v2(inst.state, inst.G, cfg).cwiseAbs().maxCoeff(), 0.0);
}

TEST(UpdateV, MatchesScalarProxFormula) {
    std::mt19937_64 rng(20);
    auto inst = random_instance(rng, 3, 6);
    SolverConfig cfg;
    cfg.gamma = 0.8;
    cfg.mu1 = 1.7;
    cfg.mu2 = 0.6;
    const Matrix V1 = update_v1(inst.state, inst.G, cfg);
    const Matrix V2 = update_v2(inst.state, inst.G, cfg);
    const Matrix& Z = inst.state.Z;
    for (Index l = 0; l < inst.G.edge_count(); ++l) {
        const auto& e = inst.G.edges[l];
        // Column prox, written out coordinate by coordinate.
        double norm = 0.0;
        for (Index m = 0; m < 6; ++m) {
            const double a = Z(m, e.i) - Z(m, e.j) + inst.state.Lambda(m, l) / cfg.mu1;
            norm += a * a;
        }
        norm = std::sqrt(norm);
        const double scale = std::max(0.0, 1.0 - cfg.gamma * e.weight / cfg.mu1 / norm);
        for (Index m = 0; m < 6; ++m) {
            const double a = Z(m, e.i) - Z(m, e.j) + inst.state.Lambda(m, l) / cfg.mu1;
            EXPECT_NEAR(V1(m, l), scale * a, 1e-12);
        }
        double rnorm = 0.0;
        for (Index m = 0; m < 6; ++m) {
            const double a = Z(e.i, m) - Z(e.j, m) + inst.state.Psi(l, m) / cfg.mu2;
            rnorm += a * a;
        }
        rnorm = std::sqrt(rnorm);
        const double rscale = std::max(0.0, 1.0 - cfg.gamma * e.weight / cfg.mu2 / rnorm);
        for (Index m = 0; m < 6; ++m) {
            const double a = Z(e.i, m) - Z(e.j, m) + inst.state.Psi(l, m) / cfg.mu2;
            EXPECT_NEAR(V2(l, m), rscale * a, 1e-12);
        }
    }
}

TEST(UpdateV, InactiveSplitIsPinned) {
    std::mt19937_64 rng(21);
    auto inst = random_instance(rng, 3, 6);
    SolverConfig cfg;
    cfg.gamma = 0.5;
    cfg.mode = FusionMode::row_only;
    EXPECT_EQ(update_v1(inst.state, inst.G, cfg), col_diffs(inst.state.Z, inst.G));
    cfg.mode = FusionMode::column_only;
    EXPECT_EQ(update_v2(inst.state, inst.G, cfg), row_diffs(inst.state.Z, inst.G));
}

TEST(UpdateDuals, ZeroResidualKeepsDuals) {
    std::mt19937_64 rng(22);
    auto inst = random_instance(rng, 3, 5);
    SolverConfig cfg;
    inst.state.V1 = col_diffs(inst.state.Z, inst.G);
    inst.state.V2 = row_diffs(inst.state.Z, inst.G);
    const Matrix L0 = inst.state.Lambda;
    const Matrix P0 = inst.state.Psi;
    update_duals(inst.state, inst.G, cfg);
    update_duals(inst.state, inst.G, cfg);
    EXPECT_EQ(inst.state.Lambda, L0);
    EXPECT_EQ(inst.state.Psi, P0);
}

TEST(UpdateDuals, UnitPenaltyAddsResidual) {
    std::mt19937_64 rng(23);
    auto inst = random_instance(rng, 3, 5);
    SolverConfig cfg;
    inst.state.Lambda.setZero();
    inst.state.Psi.setZero();
    const Matrix R1 = col_diffs(inst.state.Z, inst.G) - inst.state.V1;
    const Matrix R2 = row_diffs(inst.state.Z, inst.G) - inst.state.V2;
    update_duals(inst.state, inst.G, cfg);
    EXPECT_EQ(inst.state.Lambda, R1);
    EXPECT_EQ(inst.state.Psi, R2);
}

TEST(Solve, GammaZeroReachesZeroFidelity) {
    const auto ds = gen_example1(0);
    const auto G = build_graph(ds.data, 10);
    SolverConfig cfg;
    cfg.gamma = 0.0;
    const auto r = solve_abdr(ds.data, G, cfg);
    EXPECT_LE(r.trace.back().objective, 1e-8);
    EXPECT_LE((ds.data.values() - ds.data.values() * r.Z).norm(), 1e-4);
    EXPECT_TRUE(r.trace.converged);
}

TEST(Solve, ConvergesToFeasiblePoint) {
    const auto ds = gen_subspaces(2, 4, {1, 1}, {8, 8}, 0.05, 3);
    const auto G = build_graph(ds.data, 4);
    SolverConfig cfg;
    cfg.gamma = 0.3;
    cfg.max_iter = 3000;
    const auto r = solve_abdr(ds.data, G, cfg);
    ASSERT_TRUE(r.trace.converged);
    const auto& tr = r.trace.entries;
    // Splitting methods need not decrease the objective every step; only the endpoint is checked.
    EXPECT_LT(tr.back().objective, tr.front().objective);
    const double tol = cfg.tol_primal * std::max(1.0, r.Z.norm());
    EXPECT_LE(tr.back().res_col, tol);
    EXPECT_LE(tr.back().res_row, tol);
    for (std::size_t k = 0; k < tr.size(); ++k) EXPECT_EQ(tr[k].iter, int(k) + 1);
}

TEST(Solve, ReusedSystemGivesIdenticalResult) {
    const auto ds = gen_example2(4);
    const auto G = build_graph(ds.data, 5);
    SolverConfig cfg;
    cfg.gamma = 0.2;
    cfg.max_iter = 50;
    const ZSystem sys(ds.data, choose_alpha(G, cfg.mu1, cfg.mu2));
    EXPECT_EQ(solve_abdr(ds.data, G, cfg).Z, solve_abdr(ds.data, G, cfg, &sys).Z);
}

TEST(Solve, InvalidConfig) {
    const auto ds = gen_example1(0);
    const auto G = build_graph(ds.data, 3);
    SolverConfig cfg;
    cfg.mu1 = 0.0;
    EXPECT_THROW(solve_abdr(ds.data, G, cfg), ConfigError);
    cfg = {};
    cfg.gamma = -1.0;
    EXPECT_THROW(solve_abdr(ds.data, G, cfg), ConfigError);
}

TEST(UpdateZ, NonFiniteIterateIsReportedWithIteration) {
    const auto ds = gen_example1(0);
    const auto G = build_graph(ds.data, 10);
    SolverConfig cfg;
    const ZSystem sys(ds.data, choose_alpha(G, cfg.mu1, cfg.mu2));
    SolverState s = SolverState::initial(G);
    s.iter = 41;
    s.Lambda(0, 0) = std::numeric_limits<double>::infinity();
    try {
        update_z(s, G, cfg, sys);
        FAIL() << "expected DivergenceError";
    } catch (const DivergenceError& e) {
        EXPECT_EQ(e.iteration(), 42);
        EXPECT_NE(std::string(e.what()).find("42"), std::string::npos);
    }
}

TEST(Solve, SingularSystemIsRejected) {
    // Rank-2 gram matrix with a vanishing proximal weight cannot be factored.
    const auto ds = gen_example1(0);
    const auto G = build_graph(ds.data, 10);
    SolverConfig cfg;
    cfg.alpha = 1e-300;
    EXPECT_THROW(solve_abdr(ds.data, G, cfg), Error);
}

}  // namespace
}  // namespace abdr
