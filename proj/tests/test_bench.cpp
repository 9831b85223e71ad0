#include "ipnet/bench.hpp"
#include "ipnet/text.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

using namespace ipnet;

namespace {

ConfigValues small_domain(const std::string& name, double shift = 0.0, int dim = 2) {
    return {{"dataset." + name + ".n_classes", "4"},  {"dataset." + name + ".per_class", "20"},
            {"dataset." + name + ".dim", std::to_string(dim)},
            {"dataset." + name + ".domain_shift", std::to_string(shift)}};
}

ConfigValues concat(std::initializer_list<ConfigValues> parts) {
    ConfigValues out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

std::string read_all(const std::filesystem::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("defaults apply when only a dataset is given") {
    const auto cfg = parse_config({}, small_domain("d"));
    CHECK(cfg.learning_rate == 0.01);
    CHECK(cfg.momentum == 0.9);
    CHECK(cfg.train_shot == 10);
    CHECK(cfg.test_episodes == 2000);
    CHECK(cfg.strategies.size() == 3);
    CHECK(cfg.mode == ExperimentMode::IntraDomain);
    CHECK(cfg.embedder == EmbedderSpec::identity());
    REQUIRE(cfg.datasets.size() == 1);
    CHECK(cfg.datasets[0].synthetic->n_classes == 4);
}

TEST_CASE("config errors name the key") {
    auto message = [](const ConfigValues& file) {
        try {
            parse_config(file);
        } catch (const std::exception& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    const auto base = small_domain("d");
    CHECK(message(concat({base, {{"test_episodes", "-1"}}})).find("test_episodes") != std::string::npos);
    CHECK(message(concat({base, {{"n_way", "2,x"}}})).find("n_way") != std::string::npos);
    CHECK(message(concat({base, {{"colour", "blue"}}})).find("unknown config key 'colour'") != std::string::npos);
    CHECK(message(concat({base, {{"dataset.d.flavour", "1"}}})).find("dataset.d.flavour") != std::string::npos);
    CHECK(message(concat({base, {{"strategy", "median"}}})).find("strategy") != std::string::npos);
    CHECK(message(concat({base, {{"momentum", "1.5"}}})).find("momentum") != std::string::npos);
    CHECK(message(concat({base, {{"n_way", "3"}}})).find("test classes") != std::string::npos);
    CHECK(message(concat({base, {{"mode", "cross"}}})).find("2 datasets") != std::string::npos);
    CHECK(message({}).find("dataset") != std::string::npos);
}

TEST_CASE("config text parsing and override precedence") {
    const auto file = read_config_values("# comment\nseed = 4\n\nk_shot = 5\nstrategy = influence\n"
                                         "dataset.a.n_classes = 6\n");
    REQUIRE(file.size() == 4);
    CHECK(file[0] == std::pair<std::string, std::string>{"seed", "4"});
    const auto cfg = parse_config(file, {{"k_shot", "3,5"}});
    CHECK(cfg.k_shot == std::vector<int>{3, 5});
    CHECK(cfg.seed == 4);
    REQUIRE(cfg.strategies.size() == 1);
    CHECK(cfg.strategies[0].kind == PrototypeKind::InfluenceWeighted);
    CHECK_THROWS_AS(read_config_values("no equals sign\n"), std::invalid_argument);
}

TEST_CASE("kernel and epsilon reach the strategies") {
    const auto cfg = parse_config(concat({small_domain("d"), {{"kernel", "rbf:0.5"}, {"epsilon", "0.001"}}}));
    for (const auto& s : cfg.strategies) {
        if (s.kind == PrototypeKind::InfluenceWeighted) CHECK(s.kernel == KernelConfig::rbf(0.5));
        CHECK(s.epsilon == 0.001);
    }
}

TEST_CASE("intra-domain grid counts and determinism") {
    auto cfg = parse_config(concat({small_domain("d"),
                                    {{"strategy", "influence"}, {"k_shot", "3,5"}, {"test_episodes", "50"}}}));
    const auto table = run_experiment(cfg);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0].k_shot == 3);
    CHECK(table.rows[1].k_shot == 5);
    CHECK(table.rows[0].train_domain == "d");
    CHECK(table.rows[0].test_domain == "d");
    CHECK(table.rows[0].episodes == 50);
    CHECK(run_experiment(cfg) == table);
}

TEST_CASE("cross-domain grid counts") {
    auto three = parse_config(concat({small_domain("a"), small_domain("b", 1.0), small_domain("c", 2.0),
                                      {{"mode", "cross"}, {"strategy", "uniform"}, {"k_shot", "3"},
                                       {"test_episodes", "20"}}}));
    const auto t3 = run_experiment(three);
    CHECK(t3.rows.size() == 6);
    std::set<std::pair<std::string, std::string>> pairs;
    for (const auto& r : t3.rows) {
        CHECK(r.train_domain != r.test_domain);
        pairs.insert({r.train_domain, r.test_domain});
    }
    CHECK(pairs.size() == 6);

    auto two = parse_config(concat({small_domain("a"), small_domain("b", 1.0),
                                    {{"mode", "cross"}, {"strategy", "influence"}, {"k_shot", "3,5"},
                                     {"test_episodes", "20"}}}));
    CHECK(run_experiment(two).rows.size() == 4);
}

TEST_CASE("trained cross-domain grid is reproducible") {
    auto cfg = parse_config(concat({small_domain("a", 0.0, 3), small_domain("b", 3.0, 3),
                                    {{"mode", "cross"}, {"k_shot", "3"}, {"test_episodes", "40"},
                                     {"embedder", "feedforward:3,6,3"}, {"train_steps", "15"},
                                     {"train_shot", "5"}, {"q_query", "5"}}}));
    const auto a = run_experiment(cfg);
    CHECK(a.rows.size() == 2 * 3);
    CHECK(a.to_csv() == run_experiment(cfg).to_csv());
    cfg.threads = 1;
    CHECK(a == run_experiment(cfg));
}

TEST_CASE("cross-domain rejects mismatched dimensions") {
    auto cfg = parse_config(concat({small_domain("a", 0.0, 2), small_domain("b", 0.0, 3), {{"mode", "cross"}}}));
    CHECK_THROWS_WITH_AS(run_experiment(cfg), doctest::Contains("dimension"), std::invalid_argument);
}

TEST_CASE("grid cell failures name the cell") {
    auto cfg = parse_config(concat({small_domain("d"), {{"k_shot", "15"}, {"q_query", "10"}, {"test_episodes", "5"}}}));
    CHECK_THROWS_WITH(run_experiment(cfg), doctest::Contains("grid cell (d -> d"));
}

TEST_CASE("result tables round trip through csv and json") {
    ResultTable t;
    t.rows.push_back({"a", "b", "influence", 2, 5, 0.1 + 0.2, 1.0 / 3.0, 0.987654321012345678, 123456789012345ULL, 2000});
    t.rows.push_back({"b", "a", "uniform", 5, 1, 1e-300, 0.0, 1.0, 0, 1});
    CHECK(ResultTable::from_csv(t.to_csv()) == t);
    CHECK(ResultTable::from_json(t.to_json()) == t);
    CHECK(t.to_csv().rfind("train_domain,test_domain,strategy,n_way,k_shot,mean_acc,std_acc,mean_auc,seed,episodes\n", 0) == 0);
    const auto text = t.to_text();
    CHECK(text.find("influence") != std::string::npos);
    CHECK(text.find("30.00") != std::string::npos);
    CHECK_THROWS_AS(ResultTable::from_csv("train_domain\nx,y\n"), std::runtime_error);
}

TEST_CASE("results are never overwritten") {
    const auto dir = std::filesystem::temp_directory_path() / "ipnet_results_test";
    std::filesystem::remove_all(dir);
    ResultTable t;
    t.rows.push_back({"a", "a", "uniform", 2, 5, 0.5, 0.1, 0.6, 1, 10});
    const auto first = write_results(t, dir.string());
    t.rows[0].mean_acc = 0.75;
    const auto second = write_results(t, dir.string());
    CHECK(first != second);
    CHECK(std::filesystem::exists(first));
    CHECK(std::filesystem::exists(second));
    CHECK(ResultTable::from_csv(read_all(first)).rows[0].mean_acc == 0.5);
    CHECK(ResultTable::from_csv(read_all(dir / "latest.csv")).rows[0].mean_acc == 0.75);
    CHECK(ResultTable::from_json(read_all(dir / "latest.json")) == t);
    std::filesystem::remove_all(dir);
}

TEST_CASE("embedding export") {
    SyntheticSpec spec;
    spec.n_classes = 3;
    spec.per_class = 7;
    spec.dim = 3;
    spec.outlier_fraction = 0.3;
    const auto d = generate_synthetic(spec);
    const std::vector<PrototypeStrategy> strategies{PrototypeStrategy::uniform(), PrototypeStrategy::influence()};
    std::stringstream ss;
    write_embeddings(ss, d, Embedder::identity(), strategies);

    std::string line;
    std::getline(ss, line);
    CHECK(line == "label,e1,e2,e3");
    std::vector<std::string> lines;
    while (std::getline(ss, line)) lines.push_back(line);
    REQUIRE(lines.size() == d.size() + 3 * strategies.size());

    // Sample rows reproduce the features exactly.
    std::stringstream sample_csv;
    sample_csv << "label,e1,e2,e3\n";
    for (std::size_t i = 0; i < d.size(); ++i) sample_csv << lines[i] << "\n";
    CHECK(read_csv(sample_csv, "x").features == d.features);

    std::size_t row = d.size();
    for (const auto& st : strategies) {
        const auto protos = compute_all_prototypes(d.features, d.labels, st);
        for (std::size_t c = 0; c < protos.size(); ++c, ++row) {
            const auto fields = split(lines[row], ',');
            CHECK(fields[0] == "PROTO_" + std::to_string(protos.class_ids[c]) + "@" + st.name());
            for (std::size_t k = 0; k < 3; ++k)
                CHECK(*parse_double(fields[k + 1]) == protos.vectors[c][k]);
        }
    }
    CHECK_THROWS_AS(export_embeddings(d, Embedder::identity(), strategies, "/nonexistent/dir/e.csv"), std::runtime_error);
}

TEST_CASE("seed derivation") {
    CHECK(derive_seed(1, {"a", "b"}) == derive_seed(1, {"a", "b"}));
    CHECK(derive_seed(1, {"a", "b"}) != derive_seed(2, {"a", "b"}));
    CHECK(derive_seed(1, {"a", "b"}) != derive_seed(1, {"b", "a"}));
    CHECK(derive_seed(1, {"ab"}) != derive_seed(1, {"a", "b"}));
}

TEST_CASE("mode parsing") {
    CHECK(parse_mode("intra") == ExperimentMode::IntraDomain);
    CHECK(parse_mode("cross_domain") == ExperimentMode::CrossDomain);
    CHECK(parse_mode(to_string(ExperimentMode::CrossDomain)) == ExperimentMode::CrossDomain);
    CHECK_THROWS_AS(parse_mode("sideways"), std::invalid_argument);
}

}
