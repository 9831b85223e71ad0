#pragma once

#include "ipnet/core_math.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ipnet {

enum class KernelKind { Linear, RBF };

/// Feature map for the mean embeddings. `bandwidth` is the RBF sigma; an
/// empty value selects the median heuristic over the sets being compared.
struct KernelConfig {
    KernelKind kind = KernelKind::Linear;
    std::optional<double> bandwidth;

    static KernelConfig linear() { return {}; }
    static KernelConfig rbf(std::optional<double> sigma = std::nullopt) {
        return {KernelKind::RBF, sigma};
    }

    void validate() const;
    std::string to_string() const;
    /// Parses "linear", "rbf" (median heuristic) or "rbf:<sigma>".
    static KernelConfig parse(const std::string& text);

    friend bool operator==(const KernelConfig&, const KernelConfig&) = default;
};

struct InfluenceScores {
    std::vector<double> mmd;
    std::vector<double> if_weights;
};

/// Median of pairwise Euclidean distances between the rows; 1.0 if the median is 0.
double median_heuristic_bandwidth(const Matrix& rows);

/// Discrepancy between the kernel mean embeddings of two sample sets.
///
/// Linear: ||mean(A) - mean(B)||. RBF: square root of the biased
/// (V-statistic) MMD^2 estimate, clamped at zero, with
/// k(x, y) = exp(-||x - y||^2 / (2 sigma^2)). An automatic bandwidth is
/// taken from the median heuristic over A ∪ B.
double mmd(const Matrix& a, const Matrix& b, const KernelConfig& kernel);

/// Entry i is mmd(support, support without row i).
///
/// Requires at least two rows. For an automatic RBF bandwidth sigma is fixed
/// once from the full support so every entry is measured in the same space.
std::vector<double> leave_one_out_mmd(const Matrix& support, const KernelConfig& kernel);

/// Max-normalizes the scores and returns 1 - score/max as the weight.
///
/// When every score is (numerically) zero, or every score ties at the
/// maximum so all weights would vanish, the weights fall back to 1 each.
InfluenceScores influence_weights(std::span<const double> mmd_scores);

}  // namespace ipnet
