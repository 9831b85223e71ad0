#include "ipnet/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ipnet {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m;
    for (const auto& r : rows) m.append_row(r);
    return m;
}

void Matrix::append_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) {
        cols_ = values.size();
    } else if (values.size() != cols_) {
        throw std::invalid_argument("row has " + std::to_string(values.size()) +
                                    " columns, matrix has " + std::to_string(cols_));
    }
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= rows_) throw std::out_of_range("row index out of range");
        std::copy_n(row(indices[i]).begin(), cols_, out.row(i).begin());
    }
    return out;
}

Rng make_rng(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return Rng(seq);
}

Rng make_stream_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x9e3779b9u};
    return Rng(seq);
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: empty range");
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

double standard_normal(Rng& rng) {
    return std::normal_distribution<double>(0.0, 1.0)(rng);
}

FeatureVector random_unit_vector(Rng& rng, std::size_t dim) {
    FeatureVector v(dim);
    double norm2 = 0.0;
    while (norm2 < 1e-24) {
        norm2 = 0.0;
        for (auto& x : v) {
            x = standard_normal(rng);
            norm2 += x * x;
        }
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& x : v) x *= inv;
    return v;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

std::vector<double> softmax_neg_distances(std::span<const double> distances) {
    if (distances.empty()) throw std::invalid_argument("softmax_neg_distances: empty input");
    if (!all_finite(distances)) throw std::invalid_argument("softmax_neg_distances: non-finite distance");
    const double shift = *std::min_element(distances.begin(), distances.end());
    std::vector<double> p(distances.size());
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(-(distances[i] - shift));
        total += p[i];
    }
    for (auto& x : p) x /= total;
    return p;
}

std::size_t argmin(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("argmin: empty input");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] < values[best]) best = i;
    return best;
}

std::size_t argmax(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("argmax: empty input");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

FeatureVector mean_vector(const Matrix& rows) {
    if (rows.empty()) throw std::invalid_argument("mean_vector: no rows");
    FeatureVector mean(rows.cols(), 0.0);
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        const auto row = rows.row(r);
        for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += row[c];
    }
    const double inv = 1.0 / static_cast<double>(rows.rows());
    for (auto& x : mean) x *= inv;
    return mean;
}

FeatureVector weighted_sum(const Matrix& rows, std::span<const double> weights) {
    if (weights.size() != rows.rows()) throw std::invalid_argument("weighted_sum: weight count mismatch");
    FeatureVector out(rows.cols(), 0.0);
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        const auto row = rows.row(r);
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += weights[r] * row[c];
    }
    return out;
}

bool all_finite(std::span<const double> values) {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace ipnet
