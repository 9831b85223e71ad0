#pragma once

#include "ipnet/core_math.hpp"
#include "ipnet/datasets.hpp"
#include "ipnet/embedder.hpp"
#include "ipnet/prototypes.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ipnet {

/// One N-way K-shot task. Labels keep the dataset's class ids.
struct Episode {
    LabeledSet support;
    LabeledSet query;
    std::vector<int> class_ids;  // in draw order
    std::vector<std::size_t> support_rows;  // dataset row of each support sample
    std::vector<std::size_t> query_rows;
};

/// Draws n_way classes, then k_shot + q_query distinct rows per class; the
/// first k_shot rows of each class go to the support set.
Episode sample_episode(const Dataset& dataset, int n_way, int k_shot, int q_query, Rng& rng);

struct Classification {
    PrototypeSet prototypes;
    std::vector<std::vector<double>> probabilities;  // per query, columns follow prototypes.class_ids
    std::vector<int> predicted;                      // class id per query
};

/// Nearest-prototype classification; distance ties go to the lower class id.
Classification classify_episode(const Episode& episode, const Embedder& embedder, const PrototypeStrategy& strategy);

/// Macro one-vs-rest ROC AUC. `true_columns[i]` is the score column of query
/// i's true class. Classes without both a positive and a negative are
/// skipped; 0.5 when none qualify.
double auc_one_vs_rest(const std::vector<std::vector<double>>& scores, const std::vector<std::size_t>& true_columns);

/// Binary Mann-Whitney AUC with ties counted as 1/2; 0.5 if a side is empty.
double binary_auc(std::span<const double> scores, const std::vector<bool>& positive);

struct EpisodeRecord {
    double accuracy = 0.0;
    double auc = 0.0;
};

struct MetricsReport {
    double mean_accuracy = 0.0;
    double accuracy_std = 0.0;  // population std over episodes
    double mean_auc = 0.0;
    int episode_count = 0;
    std::vector<EpisodeRecord> per_episode;

    std::string to_json() const;
    static MetricsReport from_json(const std::string& text);
    static std::string csv_header();
    std::string csv_row(const std::string& dataset, const std::string& strategy, int n_way, int k_shot,
                        std::uint64_t seed) const;
};

struct EvaluationOptions {
    int n_way = 2;
    int k_shot = 5;
    int q_query = 5;
    int episodes = 2000;
    std::uint64_t seed = 0;
    /// 0 picks the hardware concurrency. Results do not depend on it.
    unsigned threads = 0;
    bool keep_records = false;
};

/// Runs `episodes` independent test episodes; episode i draws from
/// make_stream_rng(seed, i).
MetricsReport evaluate(const Dataset& dataset, const Embedder& embedder, const PrototypeStrategy& strategy,
                       const EvaluationOptions& options);

struct TrainingOptions {
    int n_way = 2;
    int train_shot = 10;
    int q_query = 10;
    int steps = 0;
};

struct TrainingResult {
    Embedder embedder;
    std::vector<double> loss_trace;
};

/// Sequential episodic SGD starting from `initial`; one episode per step.
TrainingResult train(const Dataset& dataset, Embedder initial, const PrototypeStrategy& strategy,
                     const TrainingOptions& options, OptimizerState optimizer, Rng& rng);

/// Initializes the embedder from `spec` with `rng`, then trains.
TrainingResult train(const Dataset& dataset, const EmbedderSpec& spec, const PrototypeStrategy& strategy,
                     const TrainingOptions& options, OptimizerState optimizer, Rng& rng);

}  // namespace ipnet
