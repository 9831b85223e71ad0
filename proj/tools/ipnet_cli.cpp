// Command-line front end: run experiment grids, generate synthetic data,
// dump embeddings and pretty-print result tables.

#include "ipnet/bench.hpp"
#include "ipnet/datasets.hpp"
#include "ipnet/embedder.hpp"
#include "ipnet/text.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Influence-weighted prototypical network benchmark"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run an intra- or cross-domain experiment grid");
    std::string config_path, out_dir = "results";
    std::vector<std::string> data_paths, sets;
    std::string seed, mode, strategy, n_way, k_shot, episodes, threads, checkpoints;
    bool quiet = false;
    run->add_option("--config", config_path, "Flat key = value experiment config")->check(CLI::ExistingFile);
    run->add_option("--data", data_paths, "Add a CSV dataset (named after the file stem)");
    run->add_option("--seed", seed, "Master seed");
    run->add_option("--mode", mode, "intra | cross");
    run->add_option("--strategy", strategy, "Comma list of uniform, influence, inverse_distance");
    run->add_option("--n-way", n_way, "Comma list of N-way values");
    run->add_option("--k-shot", k_shot, "Comma list of K-shot values");
    run->add_option("--episodes", episodes, "Test episodes per grid cell");
    run->add_option("--threads", threads, "Evaluation worker threads (0 = all cores)");
    run->add_option("--checkpoints", checkpoints, "Save trained embedders into this directory");
    run->add_option("--set", sets, "Extra override, key=value (repeatable)");
    run->add_option("--out", out_dir, "Results directory")->capture_default_str();
    run->add_flag("--quiet", quiet, "Do not print the result table");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Write a synthetic Gaussian-cluster dataset as CSV");
    ipnet::SyntheticSpec spec;
    std::string gen_out;
    gen->add_option("--name", spec.name)->capture_default_str();
    gen->add_option("--n-classes", spec.n_classes)->capture_default_str();
    gen->add_option("--per-class", spec.per_class)->capture_default_str();
    gen->add_option("--dim", spec.dim)->capture_default_str();
    gen->add_option("--separation", spec.class_separation)->capture_default_str();
    gen->add_option("--within-std", spec.within_std)->capture_default_str();
    gen->add_option("--outlier-fraction", spec.outlier_fraction)->capture_default_str();
    gen->add_option("--outlier-scale", spec.outlier_scale)->capture_default_str();
    gen->add_option("--domain-shift", spec.domain_shift)->capture_default_str();
    gen->add_option("--seed", spec.seed)->capture_default_str();
    gen->add_option("--out", gen_out, "Output CSV path")->required();

    // export-embeddings
    auto* exp = app.add_subcommand("export-embeddings", "Dump sample and prototype embeddings as CSV");
    std::string exp_data, exp_ckpt, exp_out, exp_strategy = "uniform,influence,inverse_distance", exp_kernel = "linear";
    exp->add_option("--data", exp_data, "Input CSV dataset")->required()->check(CLI::ExistingFile);
    exp->add_option("--checkpoint", exp_ckpt, "Embedder checkpoint (identity if omitted)")->check(CLI::ExistingFile);
    exp->add_option("--strategy", exp_strategy, "Comma list of strategies")->capture_default_str();
    exp->add_option("--kernel", exp_kernel, "linear | rbf | rbf:<sigma>")->capture_default_str();
    exp->add_option("--out", exp_out, "Output CSV path")->required();

    // report
    auto* rep = app.add_subcommand("report", "Pretty-print a result table (CSV or JSON)");
    std::string rep_in;
    rep->add_option("--in", rep_in, "Result table file")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            ipnet::ConfigValues file_values;
            if (!config_path.empty()) file_values = ipnet::read_config_values(read_file(config_path));
            ipnet::ConfigValues overrides;
            for (const auto& p : data_paths) {
                const std::string name = std::filesystem::path(p).stem().string();
                overrides.emplace_back("dataset." + name + ".source", "csv");
                overrides.emplace_back("dataset." + name + ".path", p);
            }
            auto flag = [&](const char* key, const std::string& v) {
                if (!v.empty()) overrides.emplace_back(key, v);
            };
            flag("seed", seed);
            flag("mode", mode);
            flag("strategy", strategy);
            flag("n_way", n_way);
            flag("k_shot", k_shot);
            flag("test_episodes", episodes);
            flag("threads", threads);
            flag("checkpoint_dir", checkpoints);
            for (const auto& s : sets) {
                const auto eq = s.find('=');
                if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + s + "'");
                overrides.emplace_back(ipnet::trim(s.substr(0, eq)), ipnet::trim(s.substr(eq + 1)));
            }
            const auto config = ipnet::parse_config(file_values, overrides);
            const auto table = ipnet::run_experiment(config);
            const auto path = ipnet::write_results(table, out_dir);
            if (!quiet) std::cout << table.to_text();
            std::cerr << "wrote " << path << "\n";
        } else if (*gen) {
            ipnet::save_csv(gen_out, ipnet::generate_synthetic(spec));
        } else if (*exp) {
            const auto dataset = ipnet::load_csv(exp_data, std::filesystem::path(exp_data).stem().string());
            const auto embedder = exp_ckpt.empty() ? ipnet::Embedder::identity() : ipnet::load_checkpoint(exp_ckpt);
            const auto kernel = ipnet::KernelConfig::parse(exp_kernel);
            std::vector<ipnet::PrototypeStrategy> strategies;
            for (const auto& name : ipnet::split(exp_strategy, ',')) {
                auto s = ipnet::PrototypeStrategy::parse(ipnet::trim(name));
                if (s.kind == ipnet::PrototypeKind::InfluenceWeighted) s.kernel = kernel;
                strategies.push_back(s);
            }
            ipnet::export_embeddings(dataset, embedder, strategies, exp_out);
        } else if (*rep) {
            const std::string text = read_file(rep_in);
            const bool json = std::filesystem::path(rep_in).extension() == ".json";
            const auto table = json ? ipnet::ResultTable::from_json(text) : ipnet::ResultTable::from_csv(text);
            std::cout << table.to_text();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
