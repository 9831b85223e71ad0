#pragma once

#include "ipnet/core_math.hpp"
#include "ipnet/mmd_influence.hpp"

#include <span>
#include <string>
#include <vector>

namespace ipnet {

enum class PrototypeKind { UniformMean, InfluenceWeighted, InverseDistance };

struct PrototypeStrategy {
    PrototypeKind kind = PrototypeKind::UniformMean;
    KernelConfig kernel;      // InfluenceWeighted only
    double epsilon = 1e-8;    // InverseDistance only

    static PrototypeStrategy uniform() { return {}; }
    static PrototypeStrategy influence(KernelConfig k = KernelConfig::linear()) {
        return {PrototypeKind::InfluenceWeighted, k, 1e-8};
    }
    static PrototypeStrategy inverse_distance(double eps = 1e-8) {
        return {PrototypeKind::InverseDistance, KernelConfig::linear(), eps};
    }

    void validate() const;
    /// `uniform`, `influence` or `inverse_distance`.
    std::string name() const;
    static PrototypeStrategy parse(const std::string& name);

    friend bool operator==(const PrototypeStrategy&, const PrototypeStrategy&) = default;
};

struct Prototype {
    FeatureVector vector;
    std::vector<double> weights;  // normalized, one per support row
};

struct PrototypeSet {
    std::vector<int> class_ids;  // ascending
    std::vector<FeatureVector> vectors;
    std::vector<std::vector<double>> weights_used;
    /// Support row indices of each class, parallel to weights_used.
    std::vector<std::vector<std::size_t>> members;

    std::size_t size() const noexcept { return class_ids.size(); }
};

/// Normalized per-sample weights a strategy assigns to one class's support.
/// K == 1 always yields {1}.
std::vector<double> prototype_weights(const Matrix& class_support, const PrototypeStrategy& strategy);

/// Weighted mean of the support rows under `strategy`.
///
/// UniformMean is the plain mean. InfluenceWeighted uses the influence weights
/// from the leave-one-out MMD scores. InverseDistance uses
/// 1 / (d(e_i, mean of the others) + epsilon). Returned weights sum to 1.
Prototype compute_prototype(const Matrix& class_support, const PrototypeStrategy& strategy);

/// One prototype per distinct label, classes sorted ascending.
PrototypeSet compute_all_prototypes(const Matrix& support, std::span<const int> labels,
                                    const PrototypeStrategy& strategy);

/// Rebuilds prototype vectors from `support` using weights already stored in
/// `frozen` (same class/member layout).
std::vector<FeatureVector> apply_prototype_weights(const Matrix& support, const PrototypeSet& frozen);

}  // namespace ipnet
