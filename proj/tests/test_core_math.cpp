#include "ipnet/core_math.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

using namespace ipnet;

TEST_SUITE("core_math") {

TEST_CASE("euclidean distance examples") {
    CHECK(euclidean_distance(std::vector<double>{1, 2}, std::vector<double>{4, 6}) == 5.0);
    CHECK(euclidean_distance(std::vector<double>{0, 0}, std::vector<double>{0, 0}) == 0.0);
    CHECK(euclidean_distance(std::vector<double>{1, 1, 1}, std::vector<double>{2, 3, 4}) ==
          doctest::Approx(std::sqrt(14.0)).epsilon(1e-15));
}

TEST_CASE("euclidean distance rejects mismatched dimensions") {
    try {
        euclidean_distance(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3});
        FAIL("expected an exception");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find('2') != std::string::npos);
        CHECK(msg.find('3') != std::string::npos);
    }
}

TEST_CASE("softmax over negative distances") {
    auto p = softmax_neg_distances(std::vector<double>{0, 0});
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.5));

    p = softmax_neg_distances(std::vector<double>{0, std::log(3.0)});
    CHECK(p[0] == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-14));

    // mpmath, 40 digits: 1/(1+e^-1)
    p = softmax_neg_distances(std::vector<double>{1000, 1001});
    CHECK(std::isfinite(p[0]));
    CHECK(p[0] == doctest::Approx(0.7310585786300048792).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(0.2689414213699951207).epsilon(1e-14));

    CHECK_THROWS_AS(softmax_neg_distances(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("mean vector") {
    CHECK(mean_vector(Matrix::from_rows({{0}, {0}, {3}})) == FeatureVector{1.0});
    CHECK(mean_vector(Matrix::from_rows({{1, 2}})) == FeatureVector{1, 2});
    CHECK(mean_vector(Matrix::from_rows({{1, 0}, {0, 1}})) == FeatureVector{0.5, 0.5});
    CHECK_THROWS_AS(mean_vector(Matrix()), std::invalid_argument);
}

TEST_CASE("argmin breaks ties toward the lowest index") {
    CHECK(argmin(std::vector<double>{2, 1, 1}) == 1);
    CHECK(argmax(std::vector<double>{0.5, 0.5}) == 0);
}

TEST_CASE("softmax properties on random inputs") {
    Rng rng = make_rng(99);
    std::uniform_real_distribution<double> mag(0.0, 1e6);
    std::uniform_real_distribution<double> small(0.0, 20.0);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + uniform_index(rng, 8);
        std::vector<double> d(n);
        for (auto& x : d) x = trial % 2 ? mag(rng) : small(rng);
        const auto p = softmax_neg_distances(d);
        CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
        for (double x : p) CHECK((x >= 0.0 && x <= 1.0));

        // Shift invariance.
        const double c = small(rng);
        std::vector<double> shifted = d;
        for (auto& x : shifted) x += c;
        const auto ps = softmax_neg_distances(shifted);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(ps[i] - p[i]) < 1e-9);

        // argmax(p) == argmin(d) without ties.
        CHECK(argmax(p) == argmin(d));
    }
}

TEST_CASE("triangle inequality on random triples") {
    Rng rng = make_rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t dim = 1 + uniform_index(rng, 10);
        std::vector<double> a(dim), b(dim), c(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            a[k] = standard_normal(rng);
            b[k] = standard_normal(rng);
            c[k] = standard_normal(rng);
        }
        CHECK(euclidean_distance(a, c) <= euclidean_distance(a, b) + euclidean_distance(b, c) + 1e-12);
        CHECK(euclidean_distance(a, b) == euclidean_distance(b, a));
    }
}

TEST_CASE("seeded streams are reproducible and distinct") {
    Rng a = make_stream_rng(1, 7), b = make_stream_rng(1, 7), c = make_stream_rng(1, 8);
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
    CHECK(make_rng(3)() == make_rng(3)());
}

TEST_CASE("matrix rows must agree in width") {
    Matrix m = Matrix::from_rows({{1, 2}});
    CHECK_THROWS_AS(m.append_row(std::vector<double>{1, 2, 3}), std::invalid_argument);
    const std::vector<std::size_t> idx{0, 0};
    CHECK(m.select_rows(idx).rows() == 2);
}

}
