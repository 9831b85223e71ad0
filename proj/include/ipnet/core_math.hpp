#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ipnet {

using FeatureVector = std::vector<double>;

/// Dense row-major matrix; one row per sample.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    /// Builds from nested rows; all rows must share one length.
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    void append_row(std::span<const double> values);
    Matrix select_rows(std::span<const std::size_t> indices) const;

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

using EmbeddingMatrix = Matrix;

/// Random engine used throughout: 64-bit Mersenne Twister (std::mt19937_64)
/// seeded through std::seed_seq. Draws go through the standard library
/// distributions, so streams are reproducible for a given toolchain.
using Rng = std::mt19937_64;

Rng make_rng(std::uint64_t seed);

/// Independent stream for one work item (episode, grid cell) of a seeded run.
Rng make_stream_rng(std::uint64_t seed, std::uint64_t stream);

/// Uniform integer in [0, n).
std::size_t uniform_index(Rng& rng, std::size_t n);

double standard_normal(Rng& rng);

/// Uniformly distributed direction on the unit sphere in `dim` dimensions.
FeatureVector random_unit_vector(Rng& rng, std::size_t dim);

double squared_distance(std::span<const double> a, std::span<const double> b);

/// Euclidean distance; throws std::invalid_argument on dimension mismatch.
double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// Softmax over negated distances, shift-stabilized by min(distances).
std::vector<double> softmax_neg_distances(std::span<const double> distances);

/// Index of the smallest entry; ties go to the lowest index.
std::size_t argmin(std::span<const double> values);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

FeatureVector mean_vector(const Matrix& rows);

/// Σ w_i · row_i. Weights are used as given (no normalization).
FeatureVector weighted_sum(const Matrix& rows, std::span<const double> weights);

bool all_finite(std::span<const double> values);

}  // namespace ipnet
