#pragma once

// Synthetic subspace data and CSV ingestion.
//
// Samples are stored as columns of a d x n matrix. Generated datasets keep
// the columns of each subspace contiguous, so the ideal coefficient matrix
// is block diagonal without any permutation.

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "abdr/error.hpp"
#include "abdr/types.hpp"

namespace abdr {

/// Observed d x n sample matrix. Entries are finite and no column is zero.
class DataMatrix {
public:
    explicit DataMatrix(Matrix values) : values_(std::move(values)) {
        if (values_.rows() == 0 || values_.cols() == 0) throw DimensionError("data matrix is empty");
        if (!values_.allFinite()) throw NonFiniteError("data matrix has non-finite entries");
        for (Index j = 0; j < values_.cols(); ++j) {
            if (values_.col(j).squaredNorm() == 0.0)
                throw ZeroColumnError("column " + std::to_string(j + 1) + " is all zeros", j);
        }
    }

    const Matrix& values() const noexcept { return values_; }
    Index d() const noexcept { return values_.rows(); }
    Index n() const noexcept { return values_.cols(); }

private:
    Matrix values_;
};

struct LabeledDataset {
    DataMatrix data;
    LabelVector truth;
    int subspace_count = 0;
};

namespace detail {

// Position along a 1D subspace: uniform on [-2, 2] minus the band |t| < 0.1.
inline double line_coordinate(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> magnitude(0.1, 2.0);
    std::bernoulli_distribution negative(0.5);
    const double t = magnitude(rng);
    return negative(rng) ? -t : t;
}

// Two 1D subspaces through the origin, y = slope_a * x then y = slope_b * x.
inline Matrix two_lines(std::mt19937_64& rng, double slope_a, int count_a, double slope_b,
                        int count_b) {
    Matrix X(2, count_a + count_b);
    for (int j = 0; j < count_a + count_b; ++j) {
        const double slope = j < count_a ? slope_a : slope_b;
        const double t = line_coordinate(rng);
        X(0, j) = t;
        X(1, j) = slope * t;
    }
    return X;
}

inline LabelVector contiguous_labels(const std::vector<int>& counts) {
    std::vector<int> labels;
    for (std::size_t c = 0; c < counts.size(); ++c) labels.insert(labels.end(), counts[c], int(c) + 1);
    return LabelVector(std::move(labels));
}

}  // namespace detail

/// 20 points on y = x followed by 10 points on y = -x.
inline LabeledDataset gen_example1(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return {DataMatrix(detail::two_lines(rng, 1.0, 20, -1.0, 10)), detail::contiguous_labels({20, 10}), 2};
}

/// 20 points on y = 0 followed by 10 points on y = x/2. Noise-free.
inline LabeledDataset gen_example2(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return {DataMatrix(detail::two_lines(rng, 0.0, 20, 0.5, 10)), detail::contiguous_labels({20, 10}), 2};
}

/// 40 points on y = 0 and 40 on y = x/2; floor(noisy_rate * 80) points chosen
/// without replacement get i.i.d. N(0, noise_std^2) added to each coordinate.
inline LabeledDataset gen_example3(std::uint64_t seed, double noise_std = 0.1, double noisy_rate = 0.2) {
    if (noise_std < 0.0) throw InvalidArgument("noise_std must be nonnegative");
    if (noisy_rate < 0.0 || noisy_rate > 1.0) throw InvalidArgument("noisy_rate must lie in [0, 1]");
    std::mt19937_64 rng(seed);
    Matrix X = detail::two_lines(rng, 0.0, 40, 0.5, 40);
    const auto n = static_cast<std::size_t>(X.cols());
    const auto noisy = static_cast<std::size_t>(std::floor(noisy_rate * double(n)));

    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), Index{0});
    // Partial Fisher-Yates: the first `noisy` entries are a uniform sample.
    for (std::size_t i = 0; i < noisy; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(order[i], order[pick(rng)]);
    }
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < noisy; ++i) {
        for (Index r = 0; r < X.rows(); ++r) X(r, order[i]) += noise_std * gauss(rng);
    }
    return {DataMatrix(std::move(X)), detail::contiguous_labels({40, 40}), 2};
}

/// Points from k mutually orthogonal (hence independent) subspaces of R^ambient_dim.
///
/// Each subspace gets an orthonormal basis carved out of one shared QR
/// factorization, points use standard-normal coefficients, isotropic noise
/// of `noise_std` is added and every column is scaled to unit length.
inline LabeledDataset gen_subspaces(int k, int ambient_dim, const std::vector<int>& sub_dims,
                                    const std::vector<int>& counts, double noise_std, std::uint64_t seed) {
    if (k < 1) throw InvalidArgument("k must be positive");
    if (ambient_dim < 1) throw InvalidArgument("ambient_dim must be positive");
    if (sub_dims.size() != std::size_t(k) || counts.size() != std::size_t(k))
        throw InvalidArgument("sub_dims and counts must have k entries");
    if (noise_std < 0.0) throw InvalidArgument("noise_std must be nonnegative");
    int total_dim = 0;
    for (int i = 0; i < k; ++i) {
        if (sub_dims[i] < 1 || sub_dims[i] > ambient_dim)
            throw InvalidArgument("sub_dims[" + std::to_string(i) + "] must lie in [1, ambient_dim]");
        if (counts[i] < sub_dims[i])
            throw InvalidArgument("counts[" + std::to_string(i) + "] must be >= sub_dims[" + std::to_string(i) + "]");
        total_dim += sub_dims[i];
    }
    if (total_dim > ambient_dim)
        throw InvalidArgument("sum of sub_dims exceeds ambient_dim; independence cannot be guaranteed");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix G(ambient_dim, total_dim);
    for (Index j = 0; j < G.cols(); ++j)
        for (Index i = 0; i < G.rows(); ++i) G(i, j) = gauss(rng);
    const Matrix basis = Eigen::HouseholderQR<Matrix>(G).householderQ() * Matrix::Identity(ambient_dim, total_dim);

    const int n = std::accumulate(counts.begin(), counts.end(), 0);
    Matrix X(ambient_dim, n);
    Index col = 0;
    Index offset = 0;
    for (int s = 0; s < k; ++s) {
        const auto B = basis.middleCols(offset, sub_dims[s]);
        for (int p = 0; p < counts[s]; ++p, ++col) {
            Vector coeff(sub_dims[s]);
            for (Index c = 0; c < coeff.size(); ++c) coeff(c) = gauss(rng);
            X.col(col) = B * coeff;
            for (Index r = 0; r < X.rows(); ++r) X(r, col) += noise_std * gauss(rng);
            const double norm = X.col(col).norm();
            if (norm == 0.0) throw ZeroColumnError("generated a zero column", col);
            X.col(col) /= norm;
        }
        offset += sub_dims[s];
    }
    return {DataMatrix(std::move(X)), detail::contiguous_labels(counts), k};
}

/// Scale every column to unit Euclidean norm. Throws ZeroColumnError.
inline Matrix normalize_columns(const Matrix& X) {
    Matrix out = X;
    for (Index j = 0; j < out.cols(); ++j) {
        const double norm = out.col(j).norm();
        if (norm == 0.0) throw ZeroColumnError("cannot normalize zero column " + std::to_string(j + 1), j);
        out.col(j) /= norm;
    }
    return out;
}

inline DataMatrix normalize_columns(const DataMatrix& X) { return DataMatrix(normalize_columns(X.values())); }

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

// Rows of comma-separated doubles; blank lines are skipped.
inline std::vector<std::vector<double>> read_numeric_rows(const std::string& path, bool skip_header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path, 0, 0);

    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (skip_header && line_no == 1) continue;
        const std::string_view body = trim(line);
        if (body.empty()) continue;

        std::vector<double> row;
        std::size_t start = 0;
        std::size_t col_no = 0;
        while (true) {
            ++col_no;
            const std::size_t comma = body.find(',', start);
            const std::string_view field =
                trim(body.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
            double value = 0.0;
            const char* first = field.data();
            const char* last = field.data() + field.size();
            if (!field.empty() && *first == '+') ++first;
            const auto [ptr, ec] = std::from_chars(first, last, value);
            if (field.empty() || ec != std::errc() || ptr != last) {
                throw ParseError(path + ":" + std::to_string(line_no) + ":" + std::to_string(col_no) +
                                     ": not a number: '" + std::string(field) + "'",
                                 line_no, col_no);
            }
            if (!std::isfinite(value)) {
                throw NonFiniteError(path + ":" + std::to_string(line_no) + ":" + std::to_string(col_no) +
                                     ": non-finite value '" + std::string(field) + "'");
            }
            row.push_back(value);
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": ragged row with " +
                                 std::to_string(row.size()) + " fields, expected " +
                                 std::to_string(rows.front().size()),
                             line_no, row.size());
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path + ": no data rows", 0, 0);
    return rows;
}

}  // namespace detail

/// Parse a CSV whose rows are features and columns are samples.
inline DataMatrix load_csv(const std::string& path, bool skip_header = false) {
    const auto rows = detail::read_numeric_rows(path, skip_header);
    Matrix X(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) X(Index(i), Index(j)) = rows[i][j];
    return DataMatrix(std::move(X));
}

/// One label per line, 1-based integers.
inline LabelVector load_labels_csv(const std::string& path, bool skip_header = false) {
    const auto rows = detail::read_numeric_rows(path, skip_header);
    std::vector<int> labels;
    labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double v = rows[i].front();
        if (rows[i].size() != 1 || v != std::floor(v) || v < 1.0)
            throw ParseError(path + ":" + std::to_string(i + 1) + ": expected one positive integer label", i + 1, 1);
        labels.push_back(int(v));
    }
    return LabelVector(std::move(labels));
}

}  // namespace abdr
