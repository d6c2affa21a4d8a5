#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "jcce/analysis.hpp"
#include "jcce/errors.hpp"
#include "support/oracles.hpp"

using namespace jcce;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector x(static_cast<Eigen::Index>(v.size()));
    std::copy(v.begin(), v.end(), x.data());
    return x;
}

/// SNNM written straight from its definition, no stabilisation.
double naive_snnm(const Matrix& x, const std::vector<std::size_t>& labels, double t) {
    const auto n = x.rows();
    auto theta = [&](Eigen::Index i, Eigen::Index j) {
        const double c = x.row(i).dot(x.row(j)) / (x.row(i).norm() * x.row(j).norm());
        return std::acos(std::clamp(c, -1.0, 1.0)) / std::numbers::pi;
    };
    double total = 0.0;
    int used = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double num = 0.0, den = 0.0;
        bool has_same = false;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            const double w = std::exp(-theta(i, j) / t);
            den += w;
            if (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)]) {
                num += w;
                has_same = true;
            }
        }
        if (!has_same) continue;
        total += -std::log(num / den);
        ++used;
    }
    return total / used;
}

/// Points near direction `center`, within-cluster angle about `spread` radians.
Matrix cluster(const Vector& center, std::size_t n, double spread, Rng& rng) {
    Matrix m(static_cast<Eigen::Index>(n), center.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Vector v = center.normalized();
        for (Eigen::Index k = 0; k < v.size(); ++k) v[k] += spread * rng.uniform(-1.0, 1.0);
        m.row(i) = v.transpose();
    }
    return m;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("angular distance examples and errors") {
    const Vector x = vec({0.4, -1.0, 2.0});
    CHECK(angular_distance(x, x) == doctest::Approx(0.0).epsilon(1e-7));
    CHECK(angular_distance(x, -x) == 1.0);
    CHECK(angular_distance(vec({1, 0}), vec({0, 3})) == 0.5);
    CHECK_THROWS_AS(angular_distance(vec({0, 0}), vec({1, 0})), NumericError);
    CHECK_THROWS_AS(angular_distance(vec({1, 0}), vec({1, 0, 0})), ShapeError);
}

TEST_CASE("property: angular distance is symmetric and obeys the triangle inequality") {
    Rng rng(1);
    for (int rep = 0; rep < 5000; ++rep) {
        const std::size_t e = 1 + rng.below(6);
        const Vector x = oracle::random_matrix(1, e, rng).row(0).transpose();
        const Vector y = oracle::random_matrix(1, e, rng).row(0).transpose();
        const Vector z = oracle::random_matrix(1, e, rng).row(0).transpose();
        REQUIRE(angular_distance(x, y) == angular_distance(y, x));
        REQUIRE(angular_distance(x, z) <= angular_distance(x, y) + angular_distance(y, z) + 1e-9);
        const double d = angular_distance(x, y);
        REQUIRE(d >= 0.0);
        REQUIRE(d <= 1.0);
    }
}

TEST_CASE("snnm is exactly zero for a single class") {
    Rng rng(2);
    for (double t : {1e-2, 1.0, 1e2}) {
        LabeledEmbeddings s(oracle::random_matrix(30, 4, rng), std::vector<std::size_t>(30, 3));
        CHECK(snnm(s, t).value == 0.0);
    }
}

TEST_CASE("snnm matches the naive formula") {
    Rng rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 5 + rng.below(30);  // 5 rows, 4 labels: some label repeats
        std::vector<std::size_t> labels(n);
        for (auto& l : labels) l = rng.below(4);
        const Matrix x = oracle::random_matrix(n, 3, rng);
        LabeledEmbeddings s(x, labels);
        const double t = std::exp(rng.uniform(std::log(0.05), std::log(10.0)));
        const auto v = snnm(s, t);
        REQUIRE(v.value == doctest::Approx(naive_snnm(x, labels, t)).epsilon(1e-9));
    }
}

TEST_CASE("snnm of two tight, well separated clusters is near zero") {
    Rng rng(4);
    Matrix x(40, 3);
    x.topRows(20) = cluster(vec({1, 0, 0}), 20, 0.01, rng);
    x.bottomRows(20) = cluster(vec({0, 1, 0}), 20, 0.01, rng);
    std::vector<std::size_t> labels(40, 0);
    for (std::size_t i = 20; i < 40; ++i) labels[i] = 1;
    const auto v = snnm(LabeledEmbeddings(x, labels), 0.02);
    CHECK(v.value < 0.01);
    CHECK(v.skipped == 0);
}

TEST_CASE("snnm of random labels on antipodal clusters approaches log 2 at large T") {
    Rng rng(5);
    Matrix x(200, 3);
    x.topRows(100) = cluster(vec({1, 0, 0}), 100, 0.01, rng);
    x.bottomRows(100) = cluster(vec({-1, 0, 0}), 100, 0.01, rng);
    std::vector<std::size_t> labels(200);
    for (auto& l : labels) l = rng.below(2);
    const double v = snnm(LabeledEmbeddings(x, labels), 1e3).value;
    CHECK(v == doctest::Approx(std::log(2.0)).epsilon(0.03));
}

TEST_CASE("snnm skips rows without a same-label neighbour and fails when all are skipped") {
    Matrix x(3, 2);
    x << 1, 0, 0.9, 0.1, 0, 1;
    const auto v = snnm(LabeledEmbeddings(x, {0, 0, 1}), 1.0);
    CHECK(v.skipped == 1);
    CHECK(std::isfinite(v.value));
    CHECK_THROWS_AS(snnm(LabeledEmbeddings(x, {0, 1, 2}), 1.0), NumericError);
    CHECK_THROWS_AS(LabeledEmbeddings(Matrix::Zero(2, 2), {0, 0}), NumericError);
}

TEST_CASE("property: snnm ignores positive rescaling of rows") {
    Rng rng(6);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t n = 10 + rng.below(10);
        Matrix x = oracle::random_matrix(n, 4, rng);
        std::vector<std::size_t> labels(n);
        for (auto& l : labels) l = rng.below(3);
        const double before = snnm(LabeledEmbeddings(x, labels), 0.3).value;
        x.row(static_cast<Eigen::Index>(rng.below(n))) *= std::exp(rng.uniform(-4.0, 4.0));
        REQUIRE(snnm(LabeledEmbeddings(x, labels), 0.3).value == doctest::Approx(before).epsilon(1e-12));
    }
}

TEST_CASE("snnm grid and sweep") {
    const auto grid = default_temperature_grid();
    CHECK(grid.size() == 20);
    CHECK(grid.front() == doctest::Approx(1e-2));
    CHECK(grid.back() == doctest::Approx(1e2));
    CHECK(std::is_sorted(grid.begin(), grid.end()));

    Rng rng(7);
    std::vector<std::size_t> labels(100);
    for (auto& l : labels) l = rng.below(3);
    const LabeledEmbeddings all(oracle::random_matrix(100, 5, rng), labels);
    const auto values = snnm_grid(all, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(values[i].value == snnm(all, grid[i]).value);

    const auto one = snnm_sweep(all, grid, 1, 40, rng);
    for (double ci : one.ci95) CHECK(ci == 0.0);
    const auto curve = snnm_sweep(all, grid, 20, 40, rng);
    CHECK(curve.repetitions == 20);
    CHECK(curve.sample_size == 40);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(std::isfinite(curve.means[i]));
        CHECK(curve.ci95[i] > 0.0);
    }
}

TEST_CASE("average context embedding and similarity matrix") {
    // Linear context encoder = identity on a one-hot "pos" feature, so each
    // context embeds at a chosen point.
    Log log;
    auto add = [&](const std::string& genre, const std::string& pos) {
        auto e = oracle::make_event(genre, "v", 0);
        e.context = {{"pos", pos}};
        log.push_back(std::move(e));
    };
    add("g0", "a");
    add("g0", "b");
    add("g1", "c");
    JcceModel m;
    m.schema = build_schema(log);
    m.config = EncoderConfig{Architecture::linear, {}, 2};
    LayerParams c;
    c.weights = Matrix(2, 3);
    c.weights << 1, 0, 0,  //
        0, 1, 1;
    c.biases = Vector::Zero(2);
    LayerParams t;
    t.weights = Matrix(2, 2);
    t.weights << 0.5, 0,  //
        0.5, 1;
    t.biases = Vector::Zero(2);
    m.context_encoder = {c};
    m.item_encoder = {t};

    const Vector avg = average_context_embedding(log, m, {{"genre", "g0"}});
    CHECK(avg == vec({0.5, 0.5}));
    CHECK(average_context_embedding(log, m, {{"genre", "g1"}}) == vec({0, 1}));
    CHECK_THROWS_AS(average_context_embedding(log, m, {{"genre", "g9"}}), DataError);

    const auto catalog = precompute_catalog(m, distinct_items(log));
    const auto sim = similarity_matrix(log, m, catalog);
    // g0 content embeds at (0.5, 0.5): parallel to the g0 average. acos is
    // ill-conditioned at 1, so parallel pairs are only good to about 1e-8.
    CHECK(sim.values(0, 0) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(sim.values(1, 1) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(sim.values(0, 1) == doctest::Approx(0.75).epsilon(1e-12));
    // g0 contexts at (1,0) and (0,1) are 45 degrees from their mean.
    CHECK(sim.dispersion[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(sim.dispersion[1] == 1.0);
    for (Eigen::Index k = 0; k < sim.values.size(); ++k) {
        CHECK(sim.values.data()[k] >= 0.0);
        CHECK(sim.values.data()[k] <= 1.0);
    }
}

TEST_CASE("similarity matrix flags contents absent from the log") {
    Rng rng(8);
    auto log = oracle::separable_log(3, 4, rng);
    const auto m = init_model(build_schema(log), EncoderConfig{Architecture::mlp, {6}, 3}, rng);
    const auto catalog = precompute_catalog(m, distinct_items(log));
    Log partial;
    for (const auto& e : log) {
        if (std::get<std::string>(e.item.at("genre")) != "g1") partial.push_back(e);
    }
    const auto sim = similarity_matrix(partial, m, catalog);
    CHECK(sim.present == std::vector<bool>{true, false, true});
    CHECK(std::isnan(sim.values(1, 0)));
    for (std::size_t i : {0, 2}) {
        CHECK(sim.dispersion[i] >= 0.0);
        CHECK(sim.dispersion[i] <= 1.0);
    }
    const auto labelled = context_embeddings(partial, m, catalog);
    CHECK(labelled.size() == partial.size());
}

TEST_CASE("embedding export round-trips losslessly") {
    const auto dir = std::filesystem::temp_directory_path() / "jcce_analysis_test";
    std::filesystem::create_directories(dir);
    Rng rng(9);
    const Matrix x = oracle::random_matrix(7, 4, rng, 1e3);
    std::vector<std::string> labels{"a", "b,c", "d\"e", "f", "g", "h", "i"};
    export_embeddings(x, labels, dir / "e.csv");
    const auto back = import_embeddings(dir / "e.csv");
    CHECK(back.embeddings == x);
    CHECK(back.labels == labels);

    export_embeddings(Matrix(0, 4), {}, dir / "empty.csv");
    const auto empty = import_embeddings(dir / "empty.csv");
    CHECK(empty.labels.empty());
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
