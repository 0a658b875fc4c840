#pragma once

// Plain-text artifact writers. Reals are printed with 17 significant digits
// so a dumped matrix reads back bit-identically.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "abdr/graph.hpp"
#include "abdr/solver.hpp"
#include "abdr/types.hpp"

namespace abdr::io {

inline std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ofstream open_out(const std::string& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw Error("cannot write " + path);
    return out;
}

/// Dense row-major CSV.
inline void write_matrix_csv(const std::string& path, const Matrix& M) {
    auto out = open_out(path);
    for (Index i = 0; i < M.rows(); ++i) {
        for (Index j = 0; j < M.cols(); ++j) {
            if (j) out << ',';
            out << format_real(M(i, j));
        }
        out << '\n';
    }
}

inline void write_labels_csv(const std::string& path, const LabelVector& labels) {
    auto out = open_out(path);
    for (int l : labels.labels) out << l << '\n';
}

inline void write_trace_csv(const std::string& path, const SolveTrace& trace) {
    auto out = open_out(path);
    out << "iter,objective,res_col,res_row,z_change\n";
    for (const auto& t : trace.entries) {
        out << t.iter << ',' << format_real(t.objective) << ',' << format_real(t.res_col) << ','
            << format_real(t.res_row) << ',' << format_real(t.z_change) << '\n';
    }
}

/// Edge list `i,j,weight` with 1-based node indices.
inline void write_edges_csv(const std::string& path, const WeightedGraph& G) {
    auto out = open_out(path);
    out << "i,j,weight\n";
    for (const auto& e : G.edges) out << e.i + 1 << ',' << e.j + 1 << ',' << format_real(e.weight) << '\n';
}

/// Binary 8-bit PGM of |M| scaled so that max |M| maps to 255.
inline void write_pgm(const std::string& path, const Matrix& M) {
    auto out = open_out(path, true);
    out << "P5\n" << M.cols() << ' ' << M.rows() << "\n255\n";
    const double top = M.size() ? M.cwiseAbs().maxCoeff() : 0.0;
    for (Index i = 0; i < M.rows(); ++i) {
        for (Index j = 0; j < M.cols(); ++j) {
            const double s = top > 0.0 ? std::abs(M(i, j)) / top : 0.0;
            out.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(s, 0.0, 1.0) * 255.0))));
        }
    }
}

}  // namespace abdr::io
