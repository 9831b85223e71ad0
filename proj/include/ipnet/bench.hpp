#pragma once

#include "ipnet/datasets.hpp"
#include "ipnet/embedder.hpp"
#include "ipnet/episodic.hpp"
#include "ipnet/prototypes.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ipnet {

enum class ExperimentMode { IntraDomain, CrossDomain };

std::string to_string(ExperimentMode mode);
ExperimentMode parse_mode(const std::string& text);

/// A named domain: synthetic spec or CSV file, plus its train/test class split.
struct DatasetSource {
    std::string name;
    std::optional<SyntheticSpec> synthetic;
    std::string csv_path;
    std::set<int> train_classes;  // empty: first half of the classes (rounded up)
    std::set<int> test_classes;   // empty: the remaining classes

    Dataset load() const;
};

struct ExperimentConfig {
    std::vector<DatasetSource> datasets;
    std::vector<PrototypeStrategy> strategies{PrototypeStrategy::uniform(), PrototypeStrategy::influence(),
                                              PrototypeStrategy::inverse_distance()};
    std::vector<int> n_way{2};
    std::vector<int> k_shot{3, 5};
    std::optional<int> q_query;  // test queries per class; unset means k_shot
    int train_shot = 10;
    int train_steps = 200;
    int test_episodes = 2000;
    EmbedderSpec embedder = EmbedderSpec::identity();
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::uint64_t seed = 0;
    ExperimentMode mode = ExperimentMode::IntraDomain;
    unsigned threads = 0;
    /// When set, each trained embedder is saved as
    /// `<dir>/<train domain>-<strategy>-<n>way.ckpt`.
    std::string checkpoint_dir;

    void validate() const;
};

/// Flat `key = value` text. Lines starting with '#' are comments; list values
/// are comma-separated. Keys are documented in docs/config.md.
using ConfigValues = std::vector<std::pair<std::string, std::string>>;

ConfigValues read_config_values(const std::string& text);

/// Applies file values, then `overrides` (later wins), then validates.
ExperimentConfig parse_config(const ConfigValues& file_values, const ConfigValues& overrides = {});
ExperimentConfig load_config(const std::string& path, const ConfigValues& overrides = {});

struct ResultRow {
    std::string train_domain;
    std::string test_domain;
    std::string strategy;
    int n_way = 0;
    int k_shot = 0;
    double mean_acc = 0.0;
    double std_acc = 0.0;
    double mean_auc = 0.0;
    std::uint64_t seed = 0;
    int episodes = 0;

    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ResultTable {
    std::vector<ResultRow> rows;

    /// Orders rows by (train_domain, test_domain, strategy, n_way, k_shot).
    void sort();

    std::string to_csv() const;
    static ResultTable from_csv(const std::string& text);
    std::string to_json() const;
    static ResultTable from_json(const std::string& text);
    /// Aligned text: one block per (train, test) domain pair, one line per
    /// strategy, one "acc ± std (auc)" column per N-way K-shot task.
    std::string to_text() const;

    friend bool operator==(const ResultTable&, const ResultTable&) = default;
};

/// Deterministic child seed for a named piece of work.
std::uint64_t derive_seed(std::uint64_t seed, const std::vector<std::string>& tags);

ResultTable run_intra_domain(const ExperimentConfig& config);
ResultTable run_cross_domain(const ExperimentConfig& config);
/// Dispatches on config.mode.
ResultTable run_experiment(const ExperimentConfig& config);

/// Embedding dump: a `label,e1,...,eM` header, one row per dataset sample,
/// then one `PROTO_<class>@<strategy>` row per class and strategy with the
/// prototype built from all of that class's samples.
void export_embeddings(const Dataset& dataset, const Embedder& embedder,
                       const std::vector<PrototypeStrategy>& strategies, const std::string& out_path);
void write_embeddings(std::ostream& os, const Dataset& dataset, const Embedder& embedder,
                      const std::vector<PrototypeStrategy>& strategies);

/// Writes `<dir>/results-<UTC timestamp>.{csv,json}` without replacing
/// earlier runs, then refreshes `<dir>/latest.{csv,json}`. Returns the
/// timestamped CSV path.
std::string write_results(const ResultTable& table, const std::string& dir);

}  // namespace ipnet
