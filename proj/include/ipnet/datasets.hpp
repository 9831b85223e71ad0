#pragma once

#include "ipnet/core_math.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace ipnet {

/// Gaussian class clusters with injected outliers.
///
/// Class means sit `class_separation * within_std` apart: along scaled
/// coordinate axes when dim >= n_classes, otherwise along seeded random
/// directions. `domain_shift` translates every mean by that many
/// within-class standard deviations along one seeded random direction.
/// round(per_class * outlier_fraction) rows per class (at most per_class - 1)
/// are outliers placed at exactly outlier_scale * within_std from the mean.
struct SyntheticSpec {
    std::string name = "synthetic";
    int n_classes = 2;
    int per_class = 20;
    int dim = 2;
    double class_separation = 4.0;
    double within_std = 1.0;
    double outlier_fraction = 0.0;
    double outlier_scale = 6.0;
    double domain_shift = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
    int outliers_per_class() const;
};

struct Dataset {
    std::string name;
    Matrix features;
    std::vector<int> labels;
    std::map<int, std::vector<std::size_t>> class_index;
    /// Synthetic data only: true for injected outlier rows.
    std::vector<bool> outlier;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dim() const noexcept { return features.cols(); }
    std::vector<int> class_ids() const;

    /// Builds class_index and checks the row/label invariants.
    static Dataset build(std::string name, Matrix features, std::vector<int> labels);
};

/// Class means used by generate_synthetic for `spec` (class c at index c).
std::vector<FeatureVector> synthetic_class_means(const SyntheticSpec& spec);

Dataset generate_synthetic(const SyntheticSpec& spec);

/// Rows of `label,f1,...,fD`; an optional header line is recognized by a
/// non-numeric first field.
Dataset read_csv(std::istream& is, const std::string& name);
Dataset load_csv(const std::string& path, const std::string& name);

/// Writes a `label,f1,...` header and rows at 17 significant digits.
void write_csv(std::ostream& os, const Dataset& dataset);
void save_csv(const std::string& path, const Dataset& dataset);

/// Partitions rows by class membership into "<name>/train" and "<name>/test".
std::pair<Dataset, Dataset> split_classes(const Dataset& dataset, const std::set<int>& train_ids,
                                          const std::set<int>& test_ids);

}  // namespace ipnet
