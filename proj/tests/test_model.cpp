#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "jcce/errors.hpp"
#include "jcce/model.hpp"
#include "support/oracles.hpp"

using namespace jcce;

namespace {

/// Linear model whose item encoder maps one-hot genre k to `item_rows[k]`
/// and whose context encoder ignores its input and outputs `context`.
JcceModel hand_linear_model(const std::vector<Vector>& item_rows, const Vector& context) {
    Log log;
    for (std::size_t k = 0; k < item_rows.size(); ++k) {
        log.push_back(oracle::make_event("g" + std::to_string(k), "v", static_cast<std::int64_t>(k)));
    }
    log[0].context["hour"] = std::string("21");
    JcceModel m;
    m.schema = build_schema(log);
    m.config.architecture = Architecture::linear;
    m.config.embedding_dim = static_cast<std::size_t>(context.size());
    const auto e = context.size();
    LayerParams c;
    c.weights = Matrix::Zero(e, static_cast<Eigen::Index>(m.schema.context_width()));
    c.biases = context;
    LayerParams t;
    t.weights = Matrix::Zero(e, static_cast<Eigen::Index>(item_rows.size()));
    for (std::size_t k = 0; k < item_rows.size(); ++k) t.weights.col(static_cast<Eigen::Index>(k)) = item_rows[k];
    t.biases = Vector::Zero(e);
    m.context_encoder = {c};
    m.item_encoder = {t};
    return m;
}

Vector vec(std::initializer_list<double> v) {
    Vector x(static_cast<Eigen::Index>(v.size()));
    std::copy(v.begin(), v.end(), x.data());
    return x;
}

std::vector<Attributes> genre_items(std::size_t m) {
    std::vector<Attributes> items;
    for (std::size_t k = 0; k < m; ++k) items.push_back({{"genre", "g" + std::to_string(k)}});
    return items;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("linear encoder with zero weights outputs its bias") {
    const auto m = hand_linear_model({vec({1, 0}), vec({0, 1})}, vec({0.3, -0.7}));
    Rng rng(1);
    for (int rep = 0; rep < 5; ++rep) {
        Vector x = oracle::random_matrix(1, m.schema.context_width(), rng).row(0).transpose();
        CHECK(embed_context(m, x) == vec({0.3, -0.7}));
    }
}

TEST_CASE("mlp embedding matches a hand-computed composition") {
    Rng rng(2);
    auto log = oracle::separable_log(3, 2, rng);
    JcceModel m = init_model(build_schema(log), EncoderConfig{Architecture::mlp, {4}, 2}, rng);
    const Vector x = vectorize_context(log[1], m.schema);
    const auto& l0 = m.context_encoder[0];
    const auto& l1 = m.context_encoder[1];
    const Vector hidden = (l0.weights * x + l0.biases).cwiseMax(0.0);
    const Vector expected = l1.weights * hidden + l1.biases;
    CHECK((embed_context(m, x) - expected).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(embed_context(m, x) == embed_context(m, x));
    CHECK(embed_item(m, vectorize_item(log[0].item, m.schema)).size() == 2);
    CHECK_THROWS_AS(embed_context(m, Vector(Vector::Zero(2))), ShapeError);
}

TEST_CASE("init_model sizes encoders from the schema") {
    Rng rng(3);
    auto log = oracle::separable_log(4, 2, rng);
    const auto schema = build_schema(log);
    const auto m = init_model(schema, EncoderConfig{}, rng);
    CHECK(m.context_encoder.size() == 3);
    CHECK(encoder_input_dim(m.context_encoder) == schema.context_width());
    CHECK(encoder_input_dim(m.item_encoder) == schema.item_width());
    CHECK(encoder_output_dim(m.context_encoder) == 50);
    CHECK(m.context_encoder[0].out_dim() == 250);
    CHECK(m.context_encoder[1].out_dim() == 250);
    const auto lin = init_model(schema, EncoderConfig{Architecture::linear, {250, 250}, 7}, rng);
    CHECK(lin.item_encoder.size() == 1);
    CHECK(encoder_output_dim(lin.item_encoder) == 7);
    validate_model(lin);
}

TEST_CASE("relevance examples") {
    const Vector x = vec({0.3, -1.2, 2.0});
    CHECK(relevance(x, x) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(relevance(vec({1, 0}), vec({0, 5})) == 0.0);
    CHECK(relevance(x, -x) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(relevance(vec({0, 0}), vec({1, 1})) == 0.0);
    CHECK(relevance(vec({1e-14, 0}), vec({1, 1})) == 0.0);
    Rng rng(4);
    for (int rep = 0; rep < 1000; ++rep) {
        const Vector a = oracle::random_matrix(1, 4, rng).row(0).transpose();
        const Vector b = oracle::random_matrix(1, 4, rng).row(0).transpose();
        const double r = relevance(a, b);
        REQUIRE(r >= -1.0);
        REQUIRE(r <= 1.0);
    }
}

TEST_CASE("precompute_catalog rows equal embed_item and are deterministic") {
    Rng rng(5);
    auto log = oracle::separable_log(5, 2, rng);
    const auto m = init_model(build_schema(log), EncoderConfig{Architecture::mlp, {6}, 3}, rng);
    const auto items = distinct_items(log);
    const auto cat = precompute_catalog(m, items);
    CHECK(cat.embeddings.rows() == 5);
    CHECK(cat.embeddings.cols() == 3);
    for (std::size_t j = 0; j < items.size(); ++j) {
        CHECK(Vector(cat.embeddings.row(static_cast<Eigen::Index>(j)).transpose()) ==
              embed_item(m, vectorize_item(items[j], m.schema)));
        CHECK(cat.index_of(items[j]) == j);
    }
    CHECK(precompute_catalog(m, items).embeddings == cat.embeddings);
    CHECK_FALSE(cat.index_of({{"genre", "nope"}}).has_value());

    auto dup = items;
    dup.push_back(items[0]);
    CHECK_THROWS_AS(precompute_catalog(m, dup), DataError);
    CHECK_THROWS_AS(precompute_catalog(m, {items[0]}), DataError);
}

TEST_CASE("hand-set linear model ranks items by cosine") {
    const auto m = hand_linear_model({vec({1, 0}), vec({0, 1}), vec({-1, 0})}, vec({1, 0.1}));
    const auto cat = precompute_catalog(m, genre_items(3));
    const auto list = recommend(m, {{"hour", "20"}}, cat);
    CHECK(list.ranked_item_indices == std::vector<std::size_t>{0, 1, 2});
    CHECK(list.scores[0] == doctest::Approx(1.0 / std::sqrt(1.01)));
}

TEST_CASE("identical item embeddings rank by ascending index") {
    std::vector<Vector> rows(6, vec({0.5, -0.5}));
    const auto m = hand_linear_model(rows, vec({1, 2}));
    const auto cat = precompute_catalog(m, genre_items(6));
    const auto list = recommend(m, {}, cat);
    CHECK(list.ranked_item_indices == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("property: recommend equals a brute-force oracle and is a permutation") {
    Rng rng(6);
    auto log = oracle::separable_log(8, 3, rng);
    for (auto& e : log) e.context["age"] = rng.uniform(0.0, 80.0);
    const auto m = init_model(build_schema(log), EncoderConfig{Architecture::mlp, {10, 8}, 4}, rng);
    const auto items = distinct_items(log);
    const auto cat = precompute_catalog(m, items);
    for (int rep = 0; rep < 300; ++rep) {
        Attributes ctx = log[rng.below(log.size())].context;
        ctx["age"] = rng.uniform(-10.0, 100.0);
        const auto list = recommend(m, ctx, cat);
        REQUIRE(list.ranked_item_indices == oracle::brute_force_ranking(m, ctx, items));
        auto sorted = list.ranked_item_indices;
        std::sort(sorted.begin(), sorted.end());
        std::vector<std::size_t> iota(items.size());
        std::iota(iota.begin(), iota.end(), 0);
        REQUIRE(sorted == iota);
        REQUIRE(std::is_sorted(list.scores.rbegin(), list.scores.rend()));
    }
}

TEST_CASE("property: scaling one embedding by a positive factor keeps the ranking") {
    Rng rng(7);
    for (int rep = 0; rep < 200; ++rep) {
        const Vector c = oracle::random_matrix(1, 5, rng).row(0).transpose();
        const Matrix items = oracle::random_matrix(7, 5, rng);
        std::vector<double> s(7), scaled(7);
        const auto j = static_cast<Eigen::Index>(rng.below(7));
        const double factor = std::exp(rng.uniform(-3.0, 3.0));
        for (Eigen::Index k = 0; k < 7; ++k) {
            const Vector row = items.row(k).transpose();
            s[static_cast<std::size_t>(k)] = relevance(c, row);
            scaled[static_cast<std::size_t>(k)] = relevance(c, k == j ? Vector(row * factor) : row);
        }
        const double cf = std::exp(rng.uniform(-3.0, 3.0));
        std::vector<double> ctx_scaled(7);
        for (Eigen::Index k = 0; k < 7; ++k) {
            ctx_scaled[static_cast<std::size_t>(k)] = relevance(Vector(c * cf), items.row(k).transpose());
        }
        REQUIRE(rank_scores(s).ranked_item_indices == rank_scores(scaled).ranked_item_indices);
        REQUIRE(rank_scores(s).ranked_item_indices == rank_scores(ctx_scaled).ranked_item_indices);
    }
}

}  // TEST_SUITE
