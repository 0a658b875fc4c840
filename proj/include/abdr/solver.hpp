#pragma once

// Generalized ADMM for
//
//     min_Z  1/2 ||X - XZ||_F^2 + gamma * Omega(Z),
//     Omega(Z) = sum_{(i,j) in E} w_ij (||Z_.i - Z_.j||_2 + ||Z_i. - Z_j.||_2),
//
// split as ZQ = V1, Q^T Z = V2 with scaled duals. The Z-subproblem carries
// the proximal term Xi(Z - Z^k) = 1/2 (alpha ||D||^2 - mu1 ||DQ||^2 - mu2 ||Q^T D||^2),
// which cancels the coupling through Q so every Z-update solves the same
// system (X^T X + alpha I) Z = R. That system is factored once per solve.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "abdr/dataset.hpp"
#include "abdr/error.hpp"
#include "abdr/graph.hpp"
#include "abdr/types.hpp"

namespace abdr {

/// Which fusion terms of Omega are active.
enum class FusionMode { both, column_only, row_only };

inline bool uses_columns(FusionMode m) { return m != FusionMode::row_only; }
inline bool uses_rows(FusionMode m) { return m != FusionMode::column_only; }

inline std::string to_string(FusionMode m) {
    switch (m) {
        case FusionMode::both: return "both";
        case FusionMode::column_only: return "column_only";
        case FusionMode::row_only: return "row_only";
    }
    return "both";
}

inline FusionMode parse_mode(const std::string& s) {
    if (s == "both") return FusionMode::both;
    if (s == "column_only") return FusionMode::column_only;
    if (s == "row_only") return FusionMode::row_only;
    throw InvalidArgument("unknown fusion mode '" + s + "' (expected both, column_only or row_only)");
}

struct SolverConfig {
    double gamma = 1.0;
    double mu1 = 1.0;
    double mu2 = 1.0;
    std::optional<double> alpha;  ///< nullopt: choose_alpha
    int max_iter = 200;
    double tol_primal = 1e-5;
    double tol_change = 1e-6;
    FusionMode mode = FusionMode::both;

    void validate() const {
        if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma", "must be finite and >= 0");
        if (!(mu1 > 0.0) || !std::isfinite(mu1)) throw ConfigError("mu1", "must be finite and > 0");
        if (!(mu2 > 0.0) || !std::isfinite(mu2)) throw ConfigError("mu2", "must be finite and > 0");
        if (alpha && (!(*alpha > 0.0) || !std::isfinite(*alpha))) throw ConfigError("alpha", "must be finite and > 0");
        if (max_iter < 1) throw ConfigError("max_iter", "must be >= 1");
        if (!(tol_primal > 0.0)) throw ConfigError("tol_primal", "must be > 0");
        if (!(tol_change > 0.0)) throw ConfigError("tol_change", "must be > 0");
    }
};

/// Iterates of the splitting. V2 and Psi are |E| x n, V1 and Lambda n x |E|.
struct SolverState {
    Matrix Z;
    Matrix V1;
    Matrix V2;
    Matrix Lambda;
    Matrix Psi;
    int iter = 0;

    /// Z = I, V = B(I), zero duals.
    static SolverState initial(const WeightedGraph& G) {
        SolverState s;
        s.Z = Matrix::Identity(G.n, G.n);
        s.V1 = col_diffs(s.Z, G);
        s.V2 = row_diffs(s.Z, G);
        s.Lambda = Matrix::Zero(G.n, G.edge_count());
        s.Psi = Matrix::Zero(G.edge_count(), G.n);
        return s;
    }
};

struct TraceEntry {
    int iter = 0;
    double objective = 0.0;
    double res_col = 0.0;  ///< ||V1 - ZQ||_F
    double res_row = 0.0;  ///< ||V2 - Q^T Z||_F
    double z_change = 0.0; ///< ||Z - Z_prev||_F / max(1, ||Z_prev||_F)
};

struct SolveTrace {
    std::vector<TraceEntry> entries;
    bool converged = false;

    std::size_t size() const noexcept { return entries.size(); }
    const TraceEntry& back() const { return entries.back(); }
};

struct SolveResult {
    Matrix Z;
    SolveTrace trace;
    double alpha = 0.0;
};

/// Omega restricted to the terms enabled by `mode`, without the gamma factor.
inline double fusion_penalty(const Matrix& Z, const WeightedGraph& G, FusionMode mode) {
    detail::require_square(Z, G, "fusion_penalty");
    double omega = 0.0;
    for (const auto& e : G.edges) {
        if (uses_columns(mode)) omega += e.weight * (Z.col(e.i) - Z.col(e.j)).norm();
        if (uses_rows(mode)) omega += e.weight * (Z.row(e.i) - Z.row(e.j)).norm();
    }
    return omega;
}

inline double objective(const DataMatrix& X, const Matrix& Z, const WeightedGraph& G, double gamma,
                        FusionMode mode = FusionMode::both) {
    if (X.n() != G.n) throw DimensionError("objective: data has " + std::to_string(X.n()) +
                                           " columns but graph has " + std::to_string(G.n) + " nodes");
    detail::require_square(Z, G, "objective");
    const double fidelity = 0.5 * (X.values() - X.values() * Z).squaredNorm();
    return gamma == 0.0 ? fidelity : fidelity + gamma * fusion_penalty(Z, G, mode);
}

/// prox of tau * ||.||_2: max(0, 1 - tau / ||u||) u.
template <typename Derived>
Vector block_soft_threshold(const Eigen::MatrixBase<Derived>& u, double tau) {
    if (tau < 0.0) throw InvalidArgument("block_soft_threshold: tau must be >= 0");
    const double norm = u.norm();
    if (norm <= tau || norm == 0.0) return Vector::Zero(u.size());
    return (1.0 - tau / norm) * u;
}

/// alpha = 1.01 (mu1 + mu2) sigma_max(Q)^2, floored at 1e-8 for edgeless graphs.
/// Any alpha above (mu1 + mu2) sigma_max(Q)^2 keeps Xi positive definite.
inline double choose_alpha(const WeightedGraph& G, double mu1, double mu2) {
    if (!(mu1 > 0.0) || !(mu2 > 0.0)) throw InvalidArgument("choose_alpha: mu1 and mu2 must be > 0");
    const double sigma = largest_singular_value(G.incidence);
    return std::max(1e-8, 1.01 * (mu1 + mu2) * sigma * sigma);
}

/// Factorization of X^T X + alpha I, shared by every Z-update of a solve and
/// reusable across solves that differ only in gamma.
class ZSystem {
public:
    ZSystem(const DataMatrix& X, double alpha) : alpha_(alpha), gram_(X.values().transpose() * X.values()) {
        if (!(alpha > 0.0)) throw InvalidArgument("alpha must be > 0");
        llt_.compute(gram_ + alpha * Matrix::Identity(X.n(), X.n()));
        if (llt_.info() != Eigen::Success) throw Error("X^T X + alpha I is not positive definite");
    }

    double alpha() const noexcept { return alpha_; }
    const Matrix& gram() const noexcept { return gram_; }
    Matrix solve(const Matrix& rhs) const { return llt_.solve(rhs); }

private:
    double alpha_;
    Matrix gram_;
    Eigen::LLT<Matrix> llt_;
};

/// argmin_Z f(Z) + Xi(Z - Z^k) with V~1 = V1 - Lambda/mu1, V~2 = V2 - Psi/mu2:
/// Z = (X^T X + alpha I)^{-1} (alpha Z^k + X^T X + mu1 (V~1 - Z^k Q) Q^T + mu2 Q (V~2 - Q^T Z^k)).
inline Matrix update_z(const SolverState& s, const WeightedGraph& G, const SolverConfig& cfg, const ZSystem& sys) {
    Matrix rhs = sys.alpha() * s.Z + sys.gram();
    if (G.edge_count() > 0) {
        rhs += cfg.mu1 * scatter_cols(s.V1 - s.Lambda / cfg.mu1 - col_diffs(s.Z, G), G);
        rhs += cfg.mu2 * scatter_rows(s.V2 - s.Psi / cfg.mu2 - row_diffs(s.Z, G), G);
    }
    Matrix Z = sys.solve(rhs);
    if (!Z.allFinite())
        throw DivergenceError("non-finite Z at iteration " + std::to_string(s.iter + 1), s.iter + 1);
    return Z;
}

/// Column-wise prox of (gamma w_l / mu1) ||.||_2 at ZQ + Lambda/mu1.
/// In row_only mode the column split is pinned to V1 = ZQ.
inline Matrix update_v1(const SolverState& s, const WeightedGraph& G, const SolverConfig& cfg) {
    Matrix V1 = col_diffs(s.Z, G);
    if (!uses_columns(cfg.mode)) return V1;
    for (Index l = 0; l < G.edge_count(); ++l) {
        V1.col(l) = block_soft_threshold(V1.col(l) + s.Lambda.col(l) / cfg.mu1,
                                         cfg.gamma * G.edges[l].weight / cfg.mu1);
    }
    return V1;
}

/// Row-wise mirror of update_v1 on Q^T Z + Psi/mu2; pinned in column_only mode.
inline Matrix update_v2(const SolverState& s, const WeightedGraph& G, const SolverConfig& cfg) {
    Matrix V2 = row_diffs(s.Z, G);
    if (!uses_rows(cfg.mode)) return V2;
    for (Index l = 0; l < G.edge_count(); ++l) {
        V2.row(l) = block_soft_threshold((V2.row(l) + s.Psi.row(l) / cfg.mu2).transpose(),
                                         cfg.gamma * G.edges[l].weight / cfg.mu2)
                        .transpose();
    }
    return V2;
}

/// Lambda += mu1 (ZQ - V1), Psi += mu2 (Q^T Z - V2). Inactive duals stay at zero.
inline void update_duals(SolverState& s, const WeightedGraph& G, const SolverConfig& cfg) {
    if (uses_columns(cfg.mode)) s.Lambda += cfg.mu1 * (col_diffs(s.Z, G) - s.V1);
    if (uses_rows(cfg.mode)) s.Psi += cfg.mu2 * (row_diffs(s.Z, G) - s.V2);
}

/// Run the splitting from Z = I until both primal residuals fall below
/// tol_primal * max(1, ||Z||_F) and the relative Z change below tol_change,
/// or max_iter iterations. Pass `system` to reuse a factorization; its alpha
/// then overrides the config.
inline SolveResult solve_abdr(const DataMatrix& X, const WeightedGraph& G, const SolverConfig& cfg,
                              const ZSystem* system = nullptr) {
    cfg.validate();
    if (X.n() != G.n) throw DimensionError("solve_abdr: data has " + std::to_string(X.n()) +
                                           " columns but graph has " + std::to_string(G.n) + " nodes");
    std::optional<ZSystem> owned;
    if (!system) {
        owned.emplace(X, cfg.alpha ? *cfg.alpha : choose_alpha(G, cfg.mu1, cfg.mu2));
        system = &*owned;
    }

    SolveResult result;
    result.alpha = system->alpha();
    SolverState s = SolverState::initial(G);
    for (int it = 1; it <= cfg.max_iter; ++it) {
        const Matrix Z_prev = s.Z;
        s.Z = update_z(s, G, cfg, *system);
        s.V1 = update_v1(s, G, cfg);
        s.V2 = update_v2(s, G, cfg);
        update_duals(s, G, cfg);
        s.iter = it;
        if (!s.V1.allFinite() || !s.V2.allFinite() || !s.Lambda.allFinite() || !s.Psi.allFinite())
            throw DivergenceError("non-finite iterate at iteration " + std::to_string(it), it);

        TraceEntry t;
        t.iter = it;
        t.objective = objective(X, s.Z, G, cfg.gamma, cfg.mode);
        t.res_col = (s.V1 - col_diffs(s.Z, G)).norm();
        t.res_row = (s.V2 - row_diffs(s.Z, G)).norm();
        t.z_change = (s.Z - Z_prev).norm() / std::max(1.0, Z_prev.norm());
        result.trace.entries.push_back(t);

        const double primal_tol = cfg.tol_primal * std::max(1.0, s.Z.norm());
        if (t.res_col <= primal_tol && t.res_row <= primal_tol && t.z_change <= cfg.tol_change) {
            result.trace.converged = true;
            break;
        }
    }
    result.Z = std::move(s.Z);
    return result;
}

}  // namespace abdr
