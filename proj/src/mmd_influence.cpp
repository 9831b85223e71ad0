#include "ipnet/mmd_influence.hpp"
#include "ipnet/text.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ipnet {

namespace {

constexpr double kDegenerateTolerance = 1e-12;

void check_set(const Matrix& m, const char* name) {
    if (m.empty()) throw std::invalid_argument(std::string("mmd: set ") + name + " is empty");
    if (!all_finite(m.data())) throw std::invalid_argument(std::string("mmd: set ") + name + " has non-finite entries");
}

double rbf(std::span<const double> x, std::span<const double> y, double two_sigma_sq) {
    return std::exp(-squared_distance(x, y) / two_sigma_sq);
}

double mean_kernel(const Matrix& a, const Matrix& b, double two_sigma_sq) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j) s += rbf(a.row(i), b.row(j), two_sigma_sq);
    return s / static_cast<double>(a.rows() * b.rows());
}

double rbf_mmd(const Matrix& a, const Matrix& b, double sigma) {
    const double two_sigma_sq = 2.0 * sigma * sigma;
    const double sq = mean_kernel(a, a, two_sigma_sq) + mean_kernel(b, b, two_sigma_sq) -
                      2.0 * mean_kernel(a, b, two_sigma_sq);
    return std::sqrt(std::max(0.0, sq));
}

double linear_mmd(const Matrix& a, const Matrix& b) {
    return euclidean_distance(mean_vector(a), mean_vector(b));
}

Matrix without_row(const Matrix& m, std::size_t skip) {
    Matrix out(m.rows() - 1, m.cols());
    for (std::size_t r = 0, o = 0; r < m.rows(); ++r) {
        if (r == skip) continue;
        std::copy_n(m.row(r).begin(), m.cols(), out.row(o++).begin());
    }
    return out;
}

}  // namespace

void KernelConfig::validate() const {
    if (kind == KernelKind::RBF && bandwidth && !(*bandwidth > 0.0 && std::isfinite(*bandwidth)))
        throw std::invalid_argument("kernel bandwidth must be a positive finite number");
}

std::string KernelConfig::to_string() const {
    if (kind == KernelKind::Linear) return "linear";
    if (!bandwidth) return "rbf";
    return "rbf:" + format_double(*bandwidth);
}

KernelConfig KernelConfig::parse(const std::string& text) {
    if (text == "linear") return linear();
    if (text == "rbf" || text == "rbf:auto") return rbf();
    if (text.rfind("rbf:", 0) == 0) {
        const auto sigma = parse_double(text.substr(4));
        if (!sigma) throw std::invalid_argument("kernel: expected rbf:<positive number>, got '" + text + "'");
        KernelConfig k = rbf(*sigma);
        k.validate();
        return k;
    }
    throw std::invalid_argument("kernel: expected linear | rbf | rbf:<sigma>, got '" + text + "'");
}

double median_heuristic_bandwidth(const Matrix& rows) {
    std::vector<double> d;
    for (std::size_t i = 0; i < rows.rows(); ++i)
        for (std::size_t j = i + 1; j < rows.rows(); ++j) d.push_back(euclidean_distance(rows.row(i), rows.row(j)));
    if (d.empty()) return 1.0;
    const std::size_t mid = d.size() / 2;
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
    double median = d[mid];
    if (d.size() % 2 == 0) {
        const double lower = *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid));
        median = 0.5 * (median + lower);
    }
    return median > 0.0 ? median : 1.0;
}

double mmd(const Matrix& a, const Matrix& b, const KernelConfig& kernel) {
    check_set(a, "A");
    check_set(b, "B");
    if (a.cols() != b.cols())
        throw std::invalid_argument("mmd: dimension mismatch " + std::to_string(a.cols()) + " vs " +
                                    std::to_string(b.cols()));
    kernel.validate();
    if (kernel.kind == KernelKind::Linear) return linear_mmd(a, b);
    double sigma = 0.0;
    if (kernel.bandwidth) {
        sigma = *kernel.bandwidth;
    } else {
        Matrix pooled = a;
        for (std::size_t r = 0; r < b.rows(); ++r) pooled.append_row(b.row(r));
        sigma = median_heuristic_bandwidth(pooled);
    }
    return rbf_mmd(a, b, sigma);
}

std::vector<double> leave_one_out_mmd(const Matrix& support, const KernelConfig& kernel) {
    if (support.rows() < 2)
        throw std::invalid_argument("leave_one_out_mmd: need at least 2 samples, got " +
                                    std::to_string(support.rows()));
    check_set(support, "support");
    kernel.validate();
    KernelConfig fixed = kernel;
    if (kernel.kind == KernelKind::RBF && !kernel.bandwidth) fixed.bandwidth = median_heuristic_bandwidth(support);

    std::vector<double> out(support.rows());
    for (std::size_t i = 0; i < support.rows(); ++i) out[i] = mmd(support, without_row(support, i), fixed);
    return out;
}

InfluenceScores influence_weights(std::span<const double> mmd_scores) {
    if (mmd_scores.empty()) throw std::invalid_argument("influence_weights: empty score list");
    for (std::size_t i = 0; i < mmd_scores.size(); ++i) {
        if (!std::isfinite(mmd_scores[i]) || mmd_scores[i] < 0.0)
            throw std::invalid_argument("influence_weights: score " + std::to_string(i) +
                                        " must be finite and nonnegative");
    }
    InfluenceScores out;
    out.mmd.assign(mmd_scores.begin(), mmd_scores.end());
    out.if_weights.assign(mmd_scores.size(), 1.0);

    const double peak = *std::max_element(mmd_scores.begin(), mmd_scores.end());
    if (peak < kDegenerateTolerance) return out;

    double total = 0.0;
    for (std::size_t i = 0; i < mmd_scores.size(); ++i) {
        out.if_weights[i] = 1.0 - mmd_scores[i] / peak;
        total += out.if_weights[i];
    }
    if (total < kDegenerateTolerance) std::fill(out.if_weights.begin(), out.if_weights.end(), 1.0);
    return out;
}

}  // namespace ipnet
