#include "ipnet/datasets.hpp"
#include "ipnet/episodic.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>

using namespace ipnet;

namespace {

std::string error_of(const std::string& csv) {
    std::istringstream is(csv);
    try {
        read_csv(is, "t");
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_SUITE("datasets") {

TEST_CASE("synthetic counts") {
    SyntheticSpec spec;
    spec.n_classes = 3;
    spec.per_class = 10;
    spec.dim = 4;
    const auto d = generate_synthetic(spec);
    CHECK(d.size() == 30);
    CHECK(d.dim() == 4);
    CHECK(d.class_ids() == std::vector<int>{0, 1, 2});
    for (const auto& [c, rows] : d.class_index) CHECK(rows.size() == 10);
}

TEST_CASE("synthetic generation is deterministic per seed") {
    SyntheticSpec spec;
    spec.dim = 3;
    spec.outlier_fraction = 0.2;
    spec.seed = 42;
    const auto a = generate_synthetic(spec);
    const auto b = generate_synthetic(spec);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
    CHECK(a.outlier == b.outlier);
    spec.seed = 43;
    CHECK_FALSE(generate_synthetic(spec).features == a.features);
}

TEST_CASE("class means sit class_separation standard deviations apart") {
    for (int dim : {2, 5}) {
        SyntheticSpec spec;
        spec.n_classes = dim == 2 ? 4 : 3;
        spec.dim = dim;
        spec.class_separation = 3.0;
        spec.within_std = 0.5;
        const auto means = synthetic_class_means(spec);
        if (dim >= spec.n_classes)
            for (std::size_t i = 0; i < means.size(); ++i)
                for (std::size_t j = i + 1; j < means.size(); ++j)
                    CHECK(euclidean_distance(means[i], means[j]) == doctest::Approx(1.5));
        for (const auto& m : means) CHECK(euclidean_distance(m, FeatureVector(dim, 0.0)) == doctest::Approx(1.5 / std::sqrt(2.0)));
    }
}

TEST_CASE("outliers: count and exact radius") {
    for (double frac : {0.0, 0.1, 0.25, 0.5, 0.99}) {
        SyntheticSpec spec;
        spec.n_classes = 3;
        spec.per_class = 8;
        spec.dim = 5;
        spec.within_std = 1.5;
        spec.outlier_fraction = frac;
        spec.outlier_scale = 6.0;
        spec.domain_shift = 2.0;
        const auto d = generate_synthetic(spec);
        const auto means = synthetic_class_means(spec);
        const int expected = std::min(static_cast<int>(std::lround(8 * frac)), 7);
        CHECK(spec.outliers_per_class() == expected);
        for (const auto& [c, rows] : d.class_index) {
            int count = 0;
            for (auto r : rows)
                if (d.outlier[r]) {
                    ++count;
                    CHECK(euclidean_distance(d.features.row(r), means[std::size_t(c)]) ==
                          doctest::Approx(6.0 * 1.5).epsilon(1e-12));
                }
            CHECK(count == expected);
        }
    }
}

TEST_CASE("invalid synthetic specs are rejected") {
    auto bad = [](auto mutate) {
        SyntheticSpec s;
        mutate(s);
        return s;
    };
    CHECK_THROWS_AS(generate_synthetic(bad([](SyntheticSpec& s) { s.n_classes = 1; })), std::invalid_argument);
    CHECK_THROWS_AS(generate_synthetic(bad([](SyntheticSpec& s) { s.per_class = 0; })), std::invalid_argument);
    CHECK_THROWS_AS(generate_synthetic(bad([](SyntheticSpec& s) { s.within_std = 0; })), std::invalid_argument);
    CHECK_THROWS_AS(generate_synthetic(bad([](SyntheticSpec& s) { s.outlier_fraction = 1.0; })), std::invalid_argument);
    CHECK_THROWS_AS(generate_synthetic(bad([](SyntheticSpec& s) { s.outlier_scale = 0.5; })), std::invalid_argument);
    CHECK_THROWS_AS(generate_synthetic(bad([](SyntheticSpec& s) { s.class_separation = -1; })), std::invalid_argument);
}

TEST_CASE("csv parsing examples") {
    std::istringstream is("0,1.5,2.0\n1,0.0,-1.0");
    const auto d = read_csv(is, "x");
    CHECK(d.size() == 2);
    CHECK(d.dim() == 2);
    CHECK(d.class_ids() == std::vector<int>{0, 1});
    CHECK(d.features == Matrix::from_rows({{1.5, 2.0}, {0.0, -1.0}}));

    std::istringstream with_header("label,a,b\n\n3, 1 ,2\n3,4,5\n");
    const auto h = read_csv(with_header, "h");
    CHECK(h.size() == 2);
    CHECK(h.class_ids() == std::vector<int>{3});
}

TEST_CASE("csv errors name the line") {
    CHECK(error_of("0,1,2\n1,3\n").find("line 2") != std::string::npos);
    CHECK(error_of("0,1,2\n1,3,abc\n").find("line 2") != std::string::npos);
    CHECK(error_of("0,1\nx,2\n").find("line 2") != std::string::npos);
    CHECK(error_of("0,1\n1,nan\n").find("line 2") != std::string::npos);
    CHECK(error_of("0\n").find("line 1") != std::string::npos);
    CHECK(error_of("").find("no data rows") != std::string::npos);
    CHECK(error_of("label,f1\n").find("no data rows") != std::string::npos);
    CHECK_THROWS_AS(load_csv("/nonexistent/dir/file.csv", "n"), std::runtime_error);
}

TEST_CASE("csv round trip is bit-exact") {
    SyntheticSpec spec;
    spec.n_classes = 4;
    spec.per_class = 25;
    spec.dim = 7;
    spec.outlier_fraction = 0.1;
    spec.seed = 9;
    auto d = generate_synthetic(spec);
    d.features(0, 0) = 1e-310;
    d.features(1, 1) = -0.1;
    d.features(2, 2) = 123456789.123456789;
    std::stringstream ss;
    write_csv(ss, d);
    const auto back = read_csv(ss, d.name);
    CHECK(back.features == d.features);
    CHECK(back.labels == d.labels);

    const auto path = std::filesystem::temp_directory_path() / "ipnet_roundtrip.csv";
    save_csv(path.string(), d);
    CHECK(load_csv(path.string(), "f").features == d.features);
    std::filesystem::remove(path);
}

TEST_CASE("split_classes") {
    SyntheticSpec spec;
    spec.n_classes = 6;
    spec.per_class = 5;
    spec.outlier_fraction = 0.2;
    const auto d = generate_synthetic(spec);

    const auto [train, test] = split_classes(d, {0, 1, 2}, {3, 4});
    CHECK(train.name == "synthetic/train");
    CHECK(test.name == "synthetic/test");
    CHECK(train.class_ids() == std::vector<int>{0, 1, 2});
    CHECK(test.class_ids() == std::vector<int>{3, 4});
    CHECK(train.size() + test.size() == 25);  // class 5 dropped
    for (std::size_t r = 0; r < test.size(); ++r) CHECK(test.labels[r] != 5);
    CHECK(train.outlier.size() == train.size());

    const auto [all_train, all_test] = split_classes(d, {0, 1, 2}, {3, 4, 5});
    CHECK(all_train.size() + all_test.size() == d.size());
    // Rows keep their relative order and values.
    std::size_t t = 0;
    for (std::size_t r = 0; r < d.size(); ++r)
        if (d.labels[r] <= 2) {
            CHECK(std::equal(d.features.row(r).begin(), d.features.row(r).end(), all_train.features.row(t).begin()));
            CHECK(all_train.outlier[t] == d.outlier[r]);
            ++t;
        }

    CHECK_THROWS_AS(split_classes(d, {0, 1}, {1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(split_classes(d, {0}, {9}), std::invalid_argument);
    CHECK_THROWS_AS(split_classes(d, {}, {1}), std::invalid_argument);
}

TEST_CASE("zero separation gives chance-level 2-way accuracy") {
    SyntheticSpec spec;
    spec.class_separation = 0.0;
    spec.per_class = 100;
    spec.dim = 4;
    spec.seed = 3;
    EvaluationOptions opt;
    opt.episodes = 2000;
    opt.seed = 5;
    const auto r = evaluate(generate_synthetic(spec), Embedder::identity(), PrototypeStrategy::uniform(), opt);
    CHECK(std::abs(r.mean_accuracy - 0.5) <= 0.03);
}

TEST_CASE("separation 10 is nearly perfectly classified") {
    SyntheticSpec spec;
    spec.class_separation = 10.0;
    spec.n_classes = 5;
    spec.per_class = 40;
    spec.dim = 5;
    spec.seed = 4;
    EvaluationOptions opt;
    opt.episodes = 500;
    opt.n_way = 5;
    const auto r = evaluate(generate_synthetic(spec), Embedder::identity(), PrototypeStrategy::uniform(), opt);
    CHECK(r.mean_accuracy > 0.99);
}

}
