#include "ipnet/bench.hpp"
#include "ipnet/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <limits>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace ipnet {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& expected, const std::string& got) {
    throw std::invalid_argument("config key '" + key + "': expected " + expected + ", got '" + got + "'");
}

long long as_int(const std::string& key, const std::string& value, long long min_value) {
    const auto v = parse_int(trim(value));
    if (!v) bad_value(key, "an integer", value);
    if (*v < min_value) bad_value(key, "an integer >= " + std::to_string(min_value), value);
    return *v;
}

double as_real(const std::string& key, const std::string& value) {
    const auto v = parse_double(trim(value));
    if (!v || !std::isfinite(*v)) bad_value(key, "a finite number", value);
    return *v;
}

std::vector<int> as_int_list(const std::string& key, const std::string& value, long long min_value) {
    std::vector<int> out;
    for (const auto& item : split(value, ',')) {
        if (trim(item).empty()) bad_value(key, "a comma-separated list of integers", value);
        out.push_back(static_cast<int>(as_int(key, item, min_value)));
    }
    return out;
}

std::set<int> as_class_set(const std::string& key, const std::string& value) {
    const auto list = as_int_list(key, value, std::numeric_limits<int>::min());
    return {list.begin(), list.end()};
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

struct PreparedDomain {
    const DatasetSource* source = nullptr;
    Dataset train;
    Dataset test;
};

PreparedDomain prepare(const DatasetSource& src) {
    const Dataset full = src.load();
    std::set<int> train = src.train_classes;
    std::set<int> test = src.test_classes;
    const auto ids = full.class_ids();
    if (train.empty() && test.empty()) {
        const std::size_t n_train = (ids.size() + 1) / 2;
        train.insert(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
        test.insert(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
    } else if (train.empty()) {
        for (int c : ids)
            if (!test.count(c)) train.insert(c);
    } else if (test.empty()) {
        for (int c : ids)
            if (!train.count(c)) test.insert(c);
    }
    auto [tr, te] = split_classes(full, train, test);
    return {&src, std::move(tr), std::move(te)};
}

std::string cell_name(const std::string& train, const std::string& test, const PrototypeStrategy& s, int n_way,
                      int k_shot) {
    return "(" + train + " -> " + test + ", " + s.name() + ", " + std::to_string(n_way) + "-way " +
           std::to_string(k_shot) + "-shot)";
}

Embedder train_for(const ExperimentConfig& config, const PreparedDomain& domain, const PrototypeStrategy& strategy,
                   int n_way) {
    Rng rng = make_rng(derive_seed(config.seed, {"train", domain.source->name, std::to_string(n_way)}));
    if (config.embedder.kind == EmbedderKind::Identity) return Embedder::identity();
    TrainingOptions opts;
    opts.n_way = n_way;
    opts.train_shot = config.train_shot;
    opts.q_query = config.q_query.value_or(config.train_shot);
    opts.steps = config.train_steps;
    OptimizerState opt;
    opt.learning_rate = config.learning_rate;
    opt.momentum = config.momentum;
    Embedder trained = train(domain.train, config.embedder, strategy, opts, opt, rng).embedder;
    if (!config.checkpoint_dir.empty()) {
        std::filesystem::create_directories(config.checkpoint_dir);
        const auto file = domain.source->name + "-" + strategy.name() + "-" + std::to_string(n_way) + "way.ckpt";
        save_checkpoint((std::filesystem::path(config.checkpoint_dir) / file).string(), trained);
    }
    return trained;
}

ResultRow evaluate_cell(const ExperimentConfig& config, const PreparedDomain& train_domain,
                        const PreparedDomain& test_domain, const Embedder& embedder,
                        const PrototypeStrategy& strategy, int n_way, int k_shot) {
    EvaluationOptions eo;
    eo.n_way = n_way;
    eo.k_shot = k_shot;
    eo.q_query = config.q_query.value_or(k_shot);
    eo.episodes = config.test_episodes;
    // Shared across strategies so every method sees the same test episodes.
    eo.seed = derive_seed(config.seed, {"eval", test_domain.source->name, std::to_string(n_way), std::to_string(k_shot)});
    eo.threads = config.threads;
    const MetricsReport m = evaluate(test_domain.test, embedder, strategy, eo);
    return {train_domain.source->name, test_domain.source->name, strategy.name(), n_way, k_shot,
            m.mean_accuracy, m.accuracy_std, m.mean_auc, config.seed, m.episode_count};
}

ResultTable run_grid(const ExperimentConfig& config, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    std::vector<PreparedDomain> domains;
    for (const auto& src : config.datasets) domains.push_back(prepare(src));

    ResultTable table;
    // Trained embedders depend on (train domain, strategy, n_way) only.
    std::map<std::tuple<std::size_t, std::size_t, int>, Embedder> trained;
    for (const auto& [tr, te] : pairs) {
        for (std::size_t s = 0; s < config.strategies.size(); ++s) {
            const auto& strategy = config.strategies[s];
            for (int n_way : config.n_way) {
                for (int k_shot : config.k_shot) {
                    const auto& train_dom = domains[tr];
                    const auto& test_dom = domains[te];
                    try {
                        auto key = std::make_tuple(tr, s, n_way);
                        auto it = trained.find(key);
                        if (it == trained.end())
                            it = trained.emplace(key, train_for(config, train_dom, strategy, n_way)).first;
                        table.rows.push_back(
                            evaluate_cell(config, train_dom, test_dom, it->second, strategy, n_way, k_shot));
                    } catch (const std::exception& e) {
                        throw std::runtime_error("grid cell " +
                                                 cell_name(train_dom.source->name, test_dom.source->name, strategy,
                                                           n_way, k_shot) +
                                                 ": " + e.what());
                    }
                }
            }
        }
    }
    table.sort();
    return table;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
    os << text;
    if (!os) throw std::runtime_error("error writing '" + path.string() + "'");
}

}  // namespace

std::string to_string(ExperimentMode mode) {
    return mode == ExperimentMode::IntraDomain ? "intra" : "cross";
}

ExperimentMode parse_mode(const std::string& text) {
    if (text == "intra" || text == "intra_domain") return ExperimentMode::IntraDomain;
    if (text == "cross" || text == "cross_domain") return ExperimentMode::CrossDomain;
    bad_value("mode", "intra | cross", text);
}

Dataset DatasetSource::load() const {
    if (synthetic) {
        SyntheticSpec spec = *synthetic;
        spec.name = name;
        return generate_synthetic(spec);
    }
    return load_csv(csv_path, name);
}

void ExperimentConfig::validate() const {
    if (datasets.empty()) throw std::invalid_argument("config: at least one dataset is required");
    if (strategies.empty()) throw std::invalid_argument("config key 'strategy': list is empty");
    if (n_way.empty()) throw std::invalid_argument("config key 'n_way': list is empty");
    if (k_shot.empty()) throw std::invalid_argument("config key 'k_shot': list is empty");
    for (int n : n_way)
        if (n < 1) bad_value("n_way", "integers >= 1", std::to_string(n));
    for (int k : k_shot)
        if (k < 1) bad_value("k_shot", "integers >= 1", std::to_string(k));
    if (q_query && *q_query < 1) bad_value("q_query", "an integer >= 1", std::to_string(*q_query));
    if (train_shot < 1) bad_value("train_shot", "an integer >= 1", std::to_string(train_shot));
    if (train_steps < 0) bad_value("train_steps", "an integer >= 0", std::to_string(train_steps));
    if (test_episodes < 1) bad_value("test_episodes", "an integer >= 1", std::to_string(test_episodes));
    for (const auto& s : strategies) s.validate();
    embedder.validate();
    OptimizerState{learning_rate, momentum, {}}.validate();
    if (mode == ExperimentMode::CrossDomain && datasets.size() < 2)
        throw std::invalid_argument("config: cross-domain mode needs at least 2 datasets");

    std::set<std::string> names;
    const int max_way = *std::max_element(n_way.begin(), n_way.end());
    for (const auto& d : datasets) {
        if (!names.insert(d.name).second) throw std::invalid_argument("config: duplicate dataset '" + d.name + "'");
        if (!d.synthetic && d.csv_path.empty())
            throw std::invalid_argument("config key 'dataset." + d.name + ".path': required for csv sources");
        if (!d.synthetic) continue;
        d.synthetic->validate();
        std::size_t n_test = d.test_classes.size();
        if (d.train_classes.empty() && d.test_classes.empty())
            n_test = static_cast<std::size_t>(d.synthetic->n_classes / 2);
        else if (d.test_classes.empty())
            n_test = static_cast<std::size_t>(d.synthetic->n_classes) - d.train_classes.size();
        if (n_test < static_cast<std::size_t>(max_way))
            throw std::invalid_argument("config: dataset '" + d.name + "' has " + std::to_string(n_test) +
                                        " test classes, n_way needs " + std::to_string(max_way));
    }
}

ConfigValues read_config_values(const std::string& text) {
    ConfigValues out;
    std::istringstream is(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = trim(t.substr(0, eq));
        if (key.empty()) throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
        out.emplace_back(key, trim(t.substr(eq + 1)));
    }
    return out;
}

ExperimentConfig parse_config(const ConfigValues& file_values, const ConfigValues& overrides) {
    ExperimentConfig cfg;
    std::string kernel_text = "linear";
    std::optional<double> epsilon;
    std::vector<std::string> strategy_names;
    std::vector<std::string> dataset_order;
    std::map<std::string, std::map<std::string, std::string>> dataset_fields;

    auto apply = [&](const std::string& key, const std::string& value) {
        if (key.rfind("dataset.", 0) == 0) {
            const auto rest = key.substr(8);
            const auto dot = rest.rfind('.');
            if (dot == std::string::npos || dot == 0)
                throw std::invalid_argument("config key '" + key + "': expected dataset.<name>.<field>");
            const std::string name = rest.substr(0, dot);
            if (!dataset_fields.count(name)) dataset_order.push_back(name);
            dataset_fields[name][rest.substr(dot + 1)] = value;
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(as_int(key, value, 0));
        } else if (key == "mode") {
            cfg.mode = parse_mode(value);
        } else if (key == "strategy" || key == "strategies") {
            strategy_names.clear();
            for (const auto& s : split(value, ',')) strategy_names.push_back(trim(s));
        } else if (key == "kernel") {
            kernel_text = value;
        } else if (key == "epsilon") {
            epsilon = as_real(key, value);
        } else if (key == "n_way") {
            cfg.n_way = as_int_list(key, value, 1);
        } else if (key == "k_shot") {
            cfg.k_shot = as_int_list(key, value, 1);
        } else if (key == "q_query") {
            cfg.q_query = static_cast<int>(as_int(key, value, 1));
        } else if (key == "train_shot") {
            cfg.train_shot = static_cast<int>(as_int(key, value, 1));
        } else if (key == "train_steps") {
            cfg.train_steps = static_cast<int>(as_int(key, value, 0));
        } else if (key == "test_episodes" || key == "episodes") {
            cfg.test_episodes = static_cast<int>(as_int(key, value, 1));
        } else if (key == "embedder") {
            try {
                cfg.embedder = EmbedderSpec::parse(value);
            } catch (const std::exception&) {
                bad_value(key, "identity | feedforward:<d0>,<d1>,...", value);
            }
        } else if (key == "learning_rate") {
            cfg.learning_rate = as_real(key, value);
        } else if (key == "momentum") {
            cfg.momentum = as_real(key, value);
        } else if (key == "threads") {
            cfg.threads = static_cast<unsigned>(as_int(key, value, 0));
        } else if (key == "checkpoint_dir") {
            cfg.checkpoint_dir = value;
        } else {
            throw std::invalid_argument("unknown config key '" + key + "'");
        }
    };
    for (const auto& [k, v] : file_values) apply(k, v);
    for (const auto& [k, v] : overrides) apply(k, v);

    KernelConfig kernel;
    try {
        kernel = KernelConfig::parse(kernel_text);
    } catch (const std::exception&) {
        bad_value("kernel", "linear | rbf | rbf:<sigma>", kernel_text);
    }
    if (!strategy_names.empty()) {
        cfg.strategies.clear();
        for (const auto& name : strategy_names) {
            try {
                cfg.strategies.push_back(PrototypeStrategy::parse(name));
            } catch (const std::exception&) {
                bad_value("strategy", "uniform | influence | inverse_distance", name);
            }
        }
    }
    for (auto& s : cfg.strategies) {
        if (s.kind == PrototypeKind::InfluenceWeighted) s.kernel = kernel;
        if (epsilon) {
            if (!(*epsilon > 0.0)) bad_value("epsilon", "a positive number", format_double(*epsilon));
            s.epsilon = *epsilon;
        }
    }

    for (const auto& name : dataset_order) {
        const auto& fields = dataset_fields[name];
        DatasetSource src;
        src.name = name;
        const auto source_it = fields.find("source");
        const std::string source = source_it == fields.end() ? "synthetic" : source_it->second;
        if (source != "synthetic" && source != "csv") bad_value("dataset." + name + ".source", "synthetic | csv", source);
        SyntheticSpec spec;
        spec.name = name;
        spec.seed = splitmix(cfg.seed ^ fnv1a(name));
        for (const auto& [field, value] : fields) {
            const std::string key = "dataset." + name + "." + field;
            if (field == "source") continue;
            if (field == "path") src.csv_path = value;
            else if (field == "train_classes") src.train_classes = as_class_set(key, value);
            else if (field == "test_classes") src.test_classes = as_class_set(key, value);
            else if (source == "csv") throw std::invalid_argument("unknown config key '" + key + "' for a csv dataset");
            else if (field == "n_classes") spec.n_classes = static_cast<int>(as_int(key, value, 2));
            else if (field == "per_class") spec.per_class = static_cast<int>(as_int(key, value, 1));
            else if (field == "dim") spec.dim = static_cast<int>(as_int(key, value, 1));
            else if (field == "separation") spec.class_separation = as_real(key, value);
            else if (field == "within_std") spec.within_std = as_real(key, value);
            else if (field == "outlier_fraction") spec.outlier_fraction = as_real(key, value);
            else if (field == "outlier_scale") spec.outlier_scale = as_real(key, value);
            else if (field == "domain_shift") spec.domain_shift = as_real(key, value);
            else if (field == "seed") spec.seed = static_cast<std::uint64_t>(as_int(key, value, 0));
            else throw std::invalid_argument("unknown config key '" + key + "'");
        }
        if (source == "synthetic") src.synthetic = spec;
        cfg.datasets.push_back(std::move(src));
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path, const ConfigValues& overrides) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read config '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(read_config_values(ss.str()), overrides);
}

void ResultTable::sort() {
    std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.train_domain, a.test_domain, a.strategy, a.n_way, a.k_shot) <
               std::tie(b.train_domain, b.test_domain, b.strategy, b.n_way, b.k_shot);
    });
}

std::string ResultTable::to_csv() const {
    std::string out = "train_domain,test_domain,strategy,n_way,k_shot,mean_acc,std_acc,mean_auc,seed,episodes\n";
    for (const auto& r : rows) {
        out += r.train_domain + "," + r.test_domain + "," + r.strategy + "," + std::to_string(r.n_way) + "," +
               std::to_string(r.k_shot) + "," + format_double(r.mean_acc) + "," + format_double(r.std_acc) + "," +
               format_double(r.mean_auc) + "," + std::to_string(r.seed) + "," + std::to_string(r.episodes) + "\n";
    }
    return out;
}

ResultTable ResultTable::from_csv(const std::string& text) {
    ResultTable t;
    std::istringstream is(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::string s = trim(line);
        if (s.empty() || (line_no == 1 && s.rfind("train_domain", 0) == 0)) continue;
        const auto f = split(s, ',');
        auto fail = [&] { throw std::runtime_error("result table line " + std::to_string(line_no) + ": malformed row"); };
        if (f.size() != 10) fail();
        ResultRow r;
        r.train_domain = f[0];
        r.test_domain = f[1];
        r.strategy = f[2];
        const auto n = parse_int(f[3]), k = parse_int(f[4]), seed = parse_int(f[8]), ep = parse_int(f[9]);
        const auto acc = parse_double(f[5]), sd = parse_double(f[6]), auc = parse_double(f[7]);
        if (!n || !k || !seed || !ep || !acc || !sd || !auc) fail();
        r.n_way = static_cast<int>(*n);
        r.k_shot = static_cast<int>(*k);
        r.mean_acc = *acc;
        r.std_acc = *sd;
        r.mean_auc = *auc;
        r.seed = static_cast<std::uint64_t>(*seed);
        r.episodes = static_cast<int>(*ep);
        t.rows.push_back(std::move(r));
    }
    return t;
}

std::string ResultTable::to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows) {
        j.push_back({{"train_domain", r.train_domain},
                     {"test_domain", r.test_domain},
                     {"strategy", r.strategy},
                     {"n_way", r.n_way},
                     {"k_shot", r.k_shot},
                     {"mean_acc", r.mean_acc},
                     {"std_acc", r.std_acc},
                     {"mean_auc", r.mean_auc},
                     {"seed", r.seed},
                     {"episodes", r.episodes}});
    }
    return j.dump(2) + "\n";
}

ResultTable ResultTable::from_json(const std::string& text) {
    ResultTable t;
    for (const auto& j : nlohmann::json::parse(text)) {
        ResultRow r;
        r.train_domain = j.at("train_domain").get<std::string>();
        r.test_domain = j.at("test_domain").get<std::string>();
        r.strategy = j.at("strategy").get<std::string>();
        r.n_way = j.at("n_way").get<int>();
        r.k_shot = j.at("k_shot").get<int>();
        r.mean_acc = j.at("mean_acc").get<double>();
        r.std_acc = j.at("std_acc").get<double>();
        r.mean_auc = j.at("mean_auc").get<double>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.episodes = j.at("episodes").get<int>();
        t.rows.push_back(std::move(r));
    }
    return t;
}

std::string ResultTable::to_text() const {
    using Block = std::pair<std::string, std::string>;
    std::vector<Block> blocks;
    std::vector<std::pair<int, int>> tasks;
    for (const auto& r : rows) {
        if (std::find(blocks.begin(), blocks.end(), Block{r.train_domain, r.test_domain}) == blocks.end())
            blocks.emplace_back(r.train_domain, r.test_domain);
        if (std::find(tasks.begin(), tasks.end(), std::pair{r.n_way, r.k_shot}) == tasks.end())
            tasks.emplace_back(r.n_way, r.k_shot);
    }
    std::sort(tasks.begin(), tasks.end());

    auto cell = [](const ResultRow& r) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.2f ± %.2f (%.3f)", 100.0 * r.mean_acc, 100.0 * r.std_acc, r.mean_auc);
        return std::string(buf);
    };
    // "±" is two bytes but one column wide.
    auto width = [](const std::string& s) {
        std::size_t w = 0;
        for (unsigned char c : s) w += (c & 0xC0) != 0x80;
        return w;
    };
    auto pad = [&](const std::string& s, std::size_t w) { return s + std::string(w > width(s) ? w - width(s) : 0, ' '); };

    std::ostringstream os;
    for (const auto& [train, test] : blocks) {
        os << (train == test ? "Domain: " + train : "Train: " + train + "  ->  Test: " + test) << "\n";
        std::vector<std::string> header{"Method"};
        for (const auto& [n, k] : tasks) header.push_back(std::to_string(n) + "-way " + std::to_string(k) + "-shot");
        std::vector<std::vector<std::string>> lines{header};
        std::vector<std::string> strategies;
        for (const auto& r : rows)
            if (r.train_domain == train && r.test_domain == test &&
                std::find(strategies.begin(), strategies.end(), r.strategy) == strategies.end())
                strategies.push_back(r.strategy);
        for (const auto& s : strategies) {
            std::vector<std::string> line{s};
            for (const auto& [n, k] : tasks) {
                auto it = std::find_if(rows.begin(), rows.end(), [&](const ResultRow& r) {
                    return r.train_domain == train && r.test_domain == test && r.strategy == s && r.n_way == n &&
                           r.k_shot == k;
                });
                line.push_back(it == rows.end() ? "-" : cell(*it));
            }
            lines.push_back(std::move(line));
        }
        std::vector<std::size_t> widths(header.size(), 0);
        for (const auto& l : lines)
            for (std::size_t c = 0; c < l.size(); ++c) widths[c] = std::max(widths[c], width(l[c]));
        for (std::size_t i = 0; i < lines.size(); ++i) {
            std::string text;
            for (std::size_t c = 0; c < lines[i].size(); ++c) text += (c ? "  " : "") + pad(lines[i][c], widths[c]);
            os << trim(text) << "\n";
            if (i == 0) {
                std::size_t total = 0;
                for (auto w : widths) total += w;
                os << std::string(total + 2 * (widths.size() - 1), '-') << "\n";
            }
        }
        os << "\n";
    }
    return os.str();
}

std::uint64_t derive_seed(std::uint64_t seed, const std::vector<std::string>& tags) {
    std::uint64_t h = splitmix(seed);
    for (const auto& t : tags) h = splitmix(fnv1a(t, h) ^ 0x5bd1e995ull);
    return h;
}

ResultTable run_intra_domain(const ExperimentConfig& config) {
    if (config.mode != ExperimentMode::IntraDomain) throw std::invalid_argument("run_intra_domain: mode is not intra");
    config.validate();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < config.datasets.size(); ++i) pairs.emplace_back(i, i);
    return run_grid(config, pairs);
}

ResultTable run_cross_domain(const ExperimentConfig& config) {
    if (config.mode != ExperimentMode::CrossDomain) throw std::invalid_argument("run_cross_domain: mode is not cross");
    config.validate();
    std::vector<std::size_t> dims;
    for (const auto& d : config.datasets) {
        if (d.synthetic) {
            dims.push_back(static_cast<std::size_t>(d.synthetic->dim));
        } else {
            dims.push_back(d.load().dim());
        }
    }
    for (std::size_t i = 1; i < dims.size(); ++i)
        if (dims[i] != dims[0])
            throw std::invalid_argument("cross-domain: dataset '" + config.datasets[i].name + "' has dimension " +
                                        std::to_string(dims[i]) + ", '" + config.datasets[0].name + "' has " +
                                        std::to_string(dims[0]));
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < config.datasets.size(); ++i)
        for (std::size_t j = 0; j < config.datasets.size(); ++j)
            if (i != j) pairs.emplace_back(i, j);
    return run_grid(config, pairs);
}

ResultTable run_experiment(const ExperimentConfig& config) {
    return config.mode == ExperimentMode::IntraDomain ? run_intra_domain(config) : run_cross_domain(config);
}

void write_embeddings(std::ostream& os, const Dataset& dataset, const Embedder& embedder,
                      const std::vector<PrototypeStrategy>& strategies) {
    const Matrix emb = embedder.embed(dataset.features);
    os << "label";
    for (std::size_t k = 0; k < emb.cols(); ++k) os << ",e" << (k + 1);
    os << '\n';
    auto row = [&](const std::string& label, std::span<const double> v) {
        os << label;
        for (double x : v) os << ',' << format_double(x);
        os << '\n';
    };
    for (std::size_t r = 0; r < emb.rows(); ++r) row(std::to_string(dataset.labels[r]), emb.row(r));
    for (const auto& s : strategies) {
        const PrototypeSet protos = compute_all_prototypes(emb, dataset.labels, s);
        for (std::size_t c = 0; c < protos.size(); ++c)
            row("PROTO_" + std::to_string(protos.class_ids[c]) + "@" + s.name(), protos.vectors[c]);
    }
}

void export_embeddings(const Dataset& dataset, const Embedder& embedder,
                       const std::vector<PrototypeStrategy>& strategies, const std::string& out_path) {
    std::ostringstream os;
    write_embeddings(os, dataset, embedder, strategies);
    write_text_file(out_path, os.str());
}

std::string write_results(const ResultTable& table, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const std::string stamp = utc_timestamp();
    fs::path csv = fs::path(dir) / ("results-" + stamp + ".csv");
    fs::path json = fs::path(dir) / ("results-" + stamp + ".json");
    for (int n = 1; fs::exists(csv) || fs::exists(json); ++n) {
        csv = fs::path(dir) / ("results-" + stamp + "-" + std::to_string(n) + ".csv");
        json = fs::path(dir) / ("results-" + stamp + "-" + std::to_string(n) + ".json");
    }
    write_text_file(csv, table.to_csv());
    write_text_file(json, table.to_json());
    write_text_file(fs::path(dir) / "latest.csv", table.to_csv());
    write_text_file(fs::path(dir) / "latest.json", table.to_json());
    return csv.string();
}

}  // namespace ipnet
