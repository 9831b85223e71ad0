#include "ipnet/episodic.hpp"
#include "ipnet/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace ipnet {

namespace {

// First `count` entries of `items` become a uniform draw without replacement.
template <typename T>
void partial_shuffle(std::vector<T>& items, std::size_t count, Rng& rng) {
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + uniform_index(rng, items.size() - i);
        std::swap(items[i], items[j]);
    }
}

}  // namespace

Episode sample_episode(const Dataset& dataset, int n_way, int k_shot, int q_query, Rng& rng) {
    if (n_way < 1 || k_shot < 1 || q_query < 1)
        throw std::invalid_argument("sample_episode: n_way, k_shot and q_query must be >= 1");
    auto classes = dataset.class_ids();
    if (classes.size() < static_cast<std::size_t>(n_way))
        throw std::invalid_argument("dataset '" + dataset.name + "' has " + std::to_string(classes.size()) +
                                    " classes, episode needs " + std::to_string(n_way));
    const auto per_class = static_cast<std::size_t>(k_shot + q_query);
    for (const auto& [cls, rows] : dataset.class_index)
        if (rows.size() < per_class)
            throw std::invalid_argument("dataset '" + dataset.name + "' class " + std::to_string(cls) + " has " +
                                        std::to_string(rows.size()) + " samples, episode needs " +
                                        std::to_string(per_class));

    partial_shuffle(classes, static_cast<std::size_t>(n_way), rng);
    Episode ep;
    ep.class_ids.assign(classes.begin(), classes.begin() + n_way);
    for (int cls : ep.class_ids) {
        auto rows = dataset.class_index.at(cls);
        partial_shuffle(rows, per_class, rng);
        for (std::size_t i = 0; i < per_class; ++i) {
            const bool to_support = i < static_cast<std::size_t>(k_shot);
            (to_support ? ep.support_rows : ep.query_rows).push_back(rows[i]);
            (to_support ? ep.support.labels : ep.query.labels).push_back(cls);
        }
    }
    ep.support.features = dataset.features.select_rows(ep.support_rows);
    ep.query.features = dataset.features.select_rows(ep.query_rows);
    return ep;
}

Classification classify_episode(const Episode& episode, const Embedder& embedder, const PrototypeStrategy& strategy) {
    const Matrix support = embedder.embed(episode.support.features);
    const Matrix query = embedder.embed(episode.query.features);
    Classification out;
    out.prototypes = compute_all_prototypes(support, episode.support.labels, strategy);
    std::vector<double> dist(out.prototypes.size());
    for (std::size_t q = 0; q < query.rows(); ++q) {
        for (std::size_t c = 0; c < dist.size(); ++c)
            dist[c] = euclidean_distance(query.row(q), out.prototypes.vectors[c]);
        out.probabilities.push_back(softmax_neg_distances(dist));
        out.predicted.push_back(out.prototypes.class_ids[argmin(dist)]);
    }
    return out;
}

double binary_auc(std::span<const double> scores, const std::vector<bool>& positive) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of midranks of the positives (Mann-Whitney U).
    double rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k)
            if (positive[order[k]]) {
                rank_sum += midrank;
                ++n_pos;
            }
        i = j;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return 0.5;
    const double np = static_cast<double>(n_pos);
    const double u = rank_sum - np * (np + 1.0) / 2.0;
    return u / (np * static_cast<double>(n_neg));
}

double auc_one_vs_rest(const std::vector<std::vector<double>>& scores, const std::vector<std::size_t>& true_columns) {
    if (scores.empty() || scores.size() != true_columns.size()) return 0.5;
    const std::size_t n_cols = scores.front().size();
    double total = 0.0;
    int counted = 0;
    std::vector<double> column(scores.size());
    std::vector<bool> positive(scores.size());
    for (std::size_t c = 0; c < n_cols; ++c) {
        std::size_t n_pos = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            column[i] = scores[i].at(c);
            positive[i] = true_columns[i] == c;
            n_pos += positive[i];
        }
        if (n_pos == 0 || n_pos == scores.size()) continue;
        total += binary_auc(column, positive);
        ++counted;
    }
    return counted == 0 ? 0.5 : total / counted;
}

std::string MetricsReport::to_json() const {
    nlohmann::json j;
    j["mean_accuracy"] = mean_accuracy;
    j["accuracy_std"] = accuracy_std;
    j["mean_auc"] = mean_auc;
    j["episode_count"] = episode_count;
    if (!per_episode.empty()) {
        auto& rec = j["per_episode"] = nlohmann::json::array();
        for (const auto& r : per_episode) rec.push_back({{"accuracy", r.accuracy}, {"auc", r.auc}});
    }
    return j.dump();
}

MetricsReport MetricsReport::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    MetricsReport m;
    m.mean_accuracy = j.at("mean_accuracy").get<double>();
    m.accuracy_std = j.at("accuracy_std").get<double>();
    m.mean_auc = j.at("mean_auc").get<double>();
    m.episode_count = j.at("episode_count").get<int>();
    if (j.contains("per_episode"))
        for (const auto& r : j["per_episode"])
            m.per_episode.push_back({r.at("accuracy").get<double>(), r.at("auc").get<double>()});
    return m;
}

std::string MetricsReport::csv_header() {
    return "dataset,strategy,n_way,k_shot,episodes,mean_acc,std_acc,mean_auc,seed";
}

std::string MetricsReport::csv_row(const std::string& dataset, const std::string& strategy, int n_way, int k_shot,
                                   std::uint64_t seed) const {
    return dataset + "," + strategy + "," + std::to_string(n_way) + "," + std::to_string(k_shot) + "," +
           std::to_string(episode_count) + "," + format_double(mean_accuracy) + "," + format_double(accuracy_std) +
           "," + format_double(mean_auc) + "," + std::to_string(seed);
}

MetricsReport evaluate(const Dataset& dataset, const Embedder& embedder, const PrototypeStrategy& strategy,
                       const EvaluationOptions& options) {
    if (options.episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
    strategy.validate();
    const auto n = static_cast<std::size_t>(options.episodes);
    std::vector<EpisodeRecord> records(n);

    auto run_episode = [&](std::size_t i) {
        Rng rng = make_stream_rng(options.seed, i);
        const Episode ep = sample_episode(dataset, options.n_way, options.k_shot, options.q_query, rng);
        const Classification cls = classify_episode(ep, embedder, strategy);
        std::size_t correct = 0;
        std::vector<std::size_t> truth(ep.query.labels.size());
        for (std::size_t q = 0; q < truth.size(); ++q) {
            correct += cls.predicted[q] == ep.query.labels[q];
            const auto& ids = cls.prototypes.class_ids;
            truth[q] = static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), ep.query.labels[q]) - ids.begin());
        }
        records[i].accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
        records[i].auc = auc_one_vs_rest(cls.probabilities, truth);
    };

    // Validate preconditions up front so errors surface on the calling thread.
    {
        Rng probe = make_stream_rng(options.seed, 0);
        (void)sample_episode(dataset, options.n_way, options.k_shot, options.q_query, probe);
    }

    unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) run_episode(i);
    } else {
        std::vector<std::exception_ptr> errors(threads);
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t i = t; i < n; i += threads) run_episode(i);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    MetricsReport report;
    report.episode_count = options.episodes;
    for (const auto& r : records) {
        report.mean_accuracy += r.accuracy;
        report.mean_auc += r.auc;
    }
    report.mean_accuracy /= static_cast<double>(n);
    report.mean_auc /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& r : records) var += (r.accuracy - report.mean_accuracy) * (r.accuracy - report.mean_accuracy);
    report.accuracy_std = std::sqrt(var / static_cast<double>(n));
    if (options.keep_records) report.per_episode = std::move(records);
    return report;
}

TrainingResult train(const Dataset& dataset, Embedder initial, const PrototypeStrategy& strategy,
                     const TrainingOptions& options, OptimizerState optimizer, Rng& rng) {
    if (options.steps < 0) throw std::invalid_argument("train: steps must be >= 0");
    optimizer.validate();
    TrainingResult result{std::move(initial), {}};
    result.loss_trace.reserve(static_cast<std::size_t>(options.steps));
    for (int step = 0; step < options.steps; ++step) {
        const Episode ep = sample_episode(dataset, options.n_way, options.train_shot, options.q_query, rng);
        LossGradient lg = backward(result.embedder, ep.support, ep.query, strategy);
        if (!std::isfinite(lg.loss)) throw std::runtime_error("train: non-finite loss at step " + std::to_string(step));
        result.loss_trace.push_back(lg.loss);
        if (result.embedder.trainable()) sgd_step(result.embedder.parameters(), lg.gradient, optimizer);
    }
    return result;
}

TrainingResult train(const Dataset& dataset, const EmbedderSpec& spec, const PrototypeStrategy& strategy,
                     const TrainingOptions& options, OptimizerState optimizer, Rng& rng) {
    Embedder initial = Embedder::initialize(spec, rng);
    return train(dataset, std::move(initial), strategy, options, std::move(optimizer), rng);
}

}  // namespace ipnet
