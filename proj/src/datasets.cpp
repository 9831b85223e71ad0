#include "ipnet/datasets.hpp"
#include "ipnet/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace ipnet {

void SyntheticSpec::validate() const {
    auto fail = [&](const std::string& what) { throw std::invalid_argument("synthetic spec '" + name + "': " + what); };
    if (n_classes < 2) fail("n_classes must be >= 2");
    if (per_class < 1) fail("per_class must be >= 1");
    if (dim < 1) fail("dim must be >= 1");
    if (!(class_separation >= 0.0) || !std::isfinite(class_separation)) fail("class_separation must be >= 0");
    if (!(within_std > 0.0) || !std::isfinite(within_std)) fail("within_std must be > 0");
    if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0)) fail("outlier_fraction must lie in [0, 1)");
    if (!(outlier_scale >= 1.0) || !std::isfinite(outlier_scale)) fail("outlier_scale must be >= 1");
    if (!std::isfinite(domain_shift)) fail("domain_shift must be finite");
}

int SyntheticSpec::outliers_per_class() const {
    const int n = static_cast<int>(std::lround(per_class * outlier_fraction));
    return std::min(n, per_class - 1);
}

std::vector<int> Dataset::class_ids() const {
    std::vector<int> ids;
    for (const auto& [c, _] : class_index) ids.push_back(c);
    return ids;
}

Dataset Dataset::build(std::string name, Matrix features, std::vector<int> labels) {
    if (features.rows() != labels.size())
        throw std::invalid_argument("dataset '" + name + "': " + std::to_string(features.rows()) + " rows but " +
                                    std::to_string(labels.size()) + " labels");
    if (features.rows() > 0 && features.cols() == 0)
        throw std::invalid_argument("dataset '" + name + "': rows have no features");
    Dataset d;
    d.name = std::move(name);
    d.features = std::move(features);
    d.labels = std::move(labels);
    for (std::size_t i = 0; i < d.labels.size(); ++i) d.class_index[d.labels[i]].push_back(i);
    return d;
}

std::vector<FeatureVector> synthetic_class_means(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng = make_stream_rng(spec.seed, 0);
    const auto dim = static_cast<std::size_t>(spec.dim);
    // Scaled so that axis-aligned means are exactly class_separation * within_std apart.
    const double radius = spec.class_separation * spec.within_std / std::sqrt(2.0);
    std::vector<FeatureVector> means;
    for (int c = 0; c < spec.n_classes; ++c) {
        FeatureVector m(dim, 0.0);
        if (spec.dim >= spec.n_classes) {
            m[static_cast<std::size_t>(c)] = radius;
        } else {
            const auto u = random_unit_vector(rng, dim);
            for (std::size_t k = 0; k < dim; ++k) m[k] = radius * u[k];
        }
        means.push_back(std::move(m));
    }
    if (spec.domain_shift != 0.0) {
        Rng shift_rng = make_stream_rng(spec.seed, 1);
        const auto u = random_unit_vector(shift_rng, dim);
        for (auto& m : means)
            for (std::size_t k = 0; k < dim; ++k) m[k] += spec.domain_shift * spec.within_std * u[k];
    }
    return means;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
    const auto means = synthetic_class_means(spec);
    Rng rng = make_stream_rng(spec.seed, 2);
    const auto dim = static_cast<std::size_t>(spec.dim);
    const int n_out = spec.outliers_per_class();

    Matrix features(static_cast<std::size_t>(spec.n_classes * spec.per_class), dim);
    std::vector<int> labels;
    std::vector<bool> outlier;
    std::size_t row = 0;
    for (int c = 0; c < spec.n_classes; ++c) {
        const auto& m = means[static_cast<std::size_t>(c)];
        for (int i = 0; i < spec.per_class; ++i, ++row) {
            const bool is_outlier = i >= spec.per_class - n_out;
            auto r = features.row(row);
            if (is_outlier) {
                const auto u = random_unit_vector(rng, dim);
                for (std::size_t k = 0; k < dim; ++k) r[k] = m[k] + spec.outlier_scale * spec.within_std * u[k];
            } else {
                for (std::size_t k = 0; k < dim; ++k) r[k] = m[k] + spec.within_std * standard_normal(rng);
            }
            labels.push_back(c);
            outlier.push_back(is_outlier);
        }
    }
    Dataset d = Dataset::build(spec.name, std::move(features), std::move(labels));
    d.outlier = std::move(outlier);
    return d;
}

Dataset read_csv(std::istream& is, const std::string& name) {
    Matrix features;
    std::vector<int> labels;
    std::string line;
    std::size_t line_no = 0;
    std::vector<double> values;
    auto fail = [&](const std::string& what) {
        throw std::runtime_error("csv '" + name + "' line " + std::to_string(line_no) + ": " + what);
    };

    while (std::getline(is, line)) {
        ++line_no;
        const std::string text = trim(line);
        if (text.empty()) continue;
        const auto fields = split(text, ',');
        const auto label = parse_int(trim(fields[0]));
        if (!label) {
            if (line_no == 1 && !parse_double(trim(fields[0]))) continue;  // header
            fail("label '" + fields[0] + "' is not an integer");
        }
        if (fields.size() < 2) fail("row has no feature columns");
        if (*label < std::numeric_limits<int>::min() || *label > std::numeric_limits<int>::max())
            fail("label out of range");
        values.clear();
        for (std::size_t f = 1; f < fields.size(); ++f) {
            const auto v = parse_double(trim(fields[f]));
            if (!v) fail("feature " + std::to_string(f) + " ('" + fields[f] + "') is not a number");
            if (!std::isfinite(*v)) fail("feature " + std::to_string(f) + " is not finite");
            values.push_back(*v);
        }
        if (!features.empty() && values.size() != features.cols())
            fail("expected " + std::to_string(features.cols()) + " features, found " + std::to_string(values.size()));
        features.append_row(values);
        labels.push_back(static_cast<int>(*label));
    }
    if (labels.empty()) throw std::runtime_error("csv '" + name + "': no data rows");
    return Dataset::build(name, std::move(features), std::move(labels));
}

Dataset load_csv(const std::string& path, const std::string& name) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open dataset file '" + path + "'");
    return read_csv(is, name);
}

void write_csv(std::ostream& os, const Dataset& dataset) {
    os << "label";
    for (std::size_t k = 0; k < dataset.dim(); ++k) os << ",f" << (k + 1);
    os << '\n';
    for (std::size_t r = 0; r < dataset.size(); ++r) {
        os << dataset.labels[r];
        for (double v : dataset.features.row(r)) os << ',' << format_double(v);
        os << '\n';
    }
}

void save_csv(const std::string& path, const Dataset& dataset) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write '" + path + "'");
    write_csv(os, dataset);
    if (!os) throw std::runtime_error("error writing '" + path + "'");
}

std::pair<Dataset, Dataset> split_classes(const Dataset& dataset, const std::set<int>& train_ids,
                                          const std::set<int>& test_ids) {
    if (train_ids.empty() || test_ids.empty()) throw std::invalid_argument("split_classes: empty class set");
    for (int c : train_ids) {
        if (test_ids.count(c)) throw std::invalid_argument("split_classes: class " + std::to_string(c) + " in both sets");
        if (!dataset.class_index.count(c))
            throw std::invalid_argument("split_classes: unknown class " + std::to_string(c) + " in '" + dataset.name + "'");
    }
    for (int c : test_ids)
        if (!dataset.class_index.count(c))
            throw std::invalid_argument("split_classes: unknown class " + std::to_string(c) + " in '" + dataset.name + "'");

    auto take = [&](const std::set<int>& ids, const std::string& suffix) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < dataset.size(); ++i)
            if (ids.count(dataset.labels[i])) rows.push_back(i);
        std::vector<int> labels;
        for (auto r : rows) labels.push_back(dataset.labels[r]);
        Dataset d = Dataset::build(dataset.name + suffix, dataset.features.select_rows(rows), std::move(labels));
        if (!dataset.outlier.empty())
            for (auto r : rows) d.outlier.push_back(dataset.outlier[r]);
        return d;
    };
    return {take(train_ids, "/train"), take(test_ids, "/test")};
}

}  // namespace ipnet
