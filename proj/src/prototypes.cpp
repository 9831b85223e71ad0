#include "ipnet/prototypes.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace ipnet {

namespace {

std::vector<double> normalized(std::vector<double> w) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= total;
    return w;
}

std::vector<double> inverse_distance_weights(const Matrix& support, double epsilon) {
    const std::size_t k = support.rows();
    FeatureVector sum(support.cols(), 0.0);
    for (std::size_t r = 0; r < k; ++r)
        for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += support(r, c);

    std::vector<double> w(k);
    FeatureVector others(support.cols());
    const double inv = 1.0 / static_cast<double>(k - 1);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t c = 0; c < others.size(); ++c) others[c] = (sum[c] - support(i, c)) * inv;
        w[i] = 1.0 / (euclidean_distance(support.row(i), others) + epsilon);
    }
    return normalized(std::move(w));
}

// Exactly uniform weights reduce to the plain mean so the fallback path is
// bit-identical to UniformMean.
FeatureVector combine(const Matrix& rows, const std::vector<double>& w) {
    if (std::all_of(w.begin(), w.end(), [&](double x) { return x == w.front(); })) return mean_vector(rows);
    return weighted_sum(rows, w);
}

}  // namespace

void PrototypeStrategy::validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw std::invalid_argument("prototype strategy: epsilon must be positive");
    kernel.validate();
}

std::string PrototypeStrategy::name() const {
    switch (kind) {
        case PrototypeKind::UniformMean: return "uniform";
        case PrototypeKind::InfluenceWeighted: return "influence";
        case PrototypeKind::InverseDistance: return "inverse_distance";
    }
    return "?";
}

PrototypeStrategy PrototypeStrategy::parse(const std::string& name) {
    if (name == "uniform") return uniform();
    if (name == "influence") return influence();
    if (name == "inverse_distance") return inverse_distance();
    throw std::invalid_argument("strategy: expected uniform | influence | inverse_distance, got '" + name + "'");
}

std::vector<double> prototype_weights(const Matrix& class_support, const PrototypeStrategy& strategy) {
    if (class_support.empty()) throw std::invalid_argument("compute_prototype: empty support");
    strategy.validate();
    const std::size_t k = class_support.rows();
    if (k == 1) return {1.0};
    switch (strategy.kind) {
        case PrototypeKind::UniformMean:
            return std::vector<double>(k, 1.0 / static_cast<double>(k));
        case PrototypeKind::InfluenceWeighted: {
            const auto scores = leave_one_out_mmd(class_support, strategy.kernel);
            return normalized(influence_weights(scores).if_weights);
        }
        case PrototypeKind::InverseDistance:
            return inverse_distance_weights(class_support, strategy.epsilon);
    }
    throw std::logic_error("unknown prototype strategy");
}

Prototype compute_prototype(const Matrix& class_support, const PrototypeStrategy& strategy) {
    Prototype p;
    p.weights = prototype_weights(class_support, strategy);
    p.vector = combine(class_support, p.weights);
    return p;
}

PrototypeSet compute_all_prototypes(const Matrix& support, std::span<const int> labels,
                                    const PrototypeStrategy& strategy) {
    if (labels.size() != support.rows())
        throw std::invalid_argument("compute_all_prototypes: " + std::to_string(labels.size()) + " labels for " +
                                    std::to_string(support.rows()) + " rows");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    PrototypeSet set;
    for (auto& [cls, rows] : by_class) {
        auto proto = compute_prototype(support.select_rows(rows), strategy);
        set.class_ids.push_back(cls);
        set.vectors.push_back(std::move(proto.vector));
        set.weights_used.push_back(std::move(proto.weights));
        set.members.push_back(std::move(rows));
    }
    return set;
}

std::vector<FeatureVector> apply_prototype_weights(const Matrix& support, const PrototypeSet& frozen) {
    std::vector<FeatureVector> out;
    out.reserve(frozen.size());
    for (std::size_t c = 0; c < frozen.size(); ++c)
        out.push_back(combine(support.select_rows(frozen.members[c]), frozen.weights_used[c]));
    return out;
}

}  // namespace ipnet
