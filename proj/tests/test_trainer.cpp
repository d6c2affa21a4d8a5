#include <doctest.h>

#include <set>

#include "jcce/errors.hpp"
#include "jcce/trainer.hpp"
#include "support/oracles.hpp"

using namespace jcce;

namespace {

TrainConfig small_config(Objective objective) {
    TrainConfig c;
    c.objective = objective;
    c.encoder = EncoderConfig{Architecture::mlp, {16}, 8};
    c.batch_size = 8;
    c.max_steps = 300;
    c.eval_every = 50;
    c.patience = 3;
    c.seed = 5;
    return c;
}

bool same_parameters(const JcceModel& a, const JcceModel& b) {
    for (const auto* pair : {&a.context_encoder, &a.item_encoder}) {
        const auto& other = pair == &a.context_encoder ? b.context_encoder : b.item_encoder;
        if (pair->size() != other.size()) return false;
        for (std::size_t l = 0; l < pair->size(); ++l) {
            if ((*pair)[l].weights != other[l].weights || (*pair)[l].biases != other[l].biases) return false;
        }
    }
    return true;
}

Log toy_log(std::size_t contents = 8, std::size_t per_content = 40) {
    Rng rng(17);
    return oracle::separable_log(contents, per_content, rng);
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("objective names round-trip") {
    for (auto o : {Objective::jcce, Objective::rjcce, Objective::ljcce, Objective::bpr}) {
        CHECK(objective_from_string(to_string(o)) == o);
    }
    CHECK_THROWS_AS(objective_from_string("nope"), ConfigError);
    CHECK(uses_strict_sampling(Objective::jcce));
    CHECK(uses_strict_sampling(Objective::ljcce));
    CHECK_FALSE(uses_strict_sampling(Objective::rjcce));
    CHECK(effective_encoder(small_config(Objective::ljcce)).architecture == Architecture::linear);
}

TEST_CASE("config validation") {
    auto bad = [](auto mutate) {
        TrainConfig c;
        mutate(c);
        return c;
    };
    CHECK_NOTHROW(validate_train_config(TrainConfig{}));
    CHECK_THROWS_AS(validate_train_config(bad([](TrainConfig& c) { c.batch_size = 1; })), ConfigError);
    CHECK_THROWS_AS(validate_train_config(bad([](TrainConfig& c) { c.patience = 0; })), ConfigError);
    CHECK_THROWS_AS(validate_train_config(bad([](TrainConfig& c) { c.validation_fraction = 0.5; })), ConfigError);
    CHECK_THROWS_AS(validate_train_config(bad([](TrainConfig& c) { c.dropout_rate = 1.0; })), ConfigError);
    CHECK_THROWS_AS(validate_train_config(bad([](TrainConfig& c) { c.lambda = -1.0; })), ConfigError);
}

TEST_CASE("max_steps = 0 returns the initial model and no records") {
    const auto log = toy_log();
    const auto schema = build_schema(std::span(log).first(fit_count(log.size(), 0.1)));
    auto config = small_config(Objective::rjcce);
    config.max_steps = 0;
    const auto result = train(log, schema, config);
    CHECK(result.history.records.empty());
    Rng init = Rng(config.seed).fork(1);
    const auto fresh = init_model(schema, effective_encoder(config), init);
    CHECK(same_parameters(result.model, fresh));
}

TEST_CASE("identical seeds give identical models for every objective") {
    const auto log = toy_log();
    const auto schema = build_schema(std::span(log).first(fit_count(log.size(), 0.1)));
    for (auto o : {Objective::jcce, Objective::rjcce, Objective::ljcce, Objective::bpr}) {
        auto config = small_config(o);
        config.max_steps = 60;
        const auto a = train(log, schema, config);
        const auto b = train(log, schema, config);
        CHECK(same_parameters(a.model, b.model));
        CHECK(a.history.records.size() == b.history.records.size());
        config.seed = 6;
        CHECK_FALSE(same_parameters(a.model, train(log, schema, config).model));
    }
}

TEST_CASE("overfit probe: loss on one fixed batch drops below a tenth of its start") {
    const auto log = toy_log(4, 10);
    const auto schema = build_schema(log);
    const auto index = index_log(log);
    auto config = small_config(Objective::jcce);
    config.dropout_rate = 0.0;
    Rng rng(3);
    auto state = make_training_state(schema, config, rng);
    auto batch = sample_npairs(index, 4, rng);
    vectorize_batch(batch, log, schema);
    const double initial = batch_objective(state.model, batch, {}, config);
    double last = initial;
    int steps = 0;
    for (; steps < 2000 && last >= 0.1 * initial; ++steps) {
        train_step(state, batch, {}, config, rng);
        last = batch_objective(state.model, batch, {}, config);
    }
    CHECK(last < 0.1 * initial);
    MESSAGE("overfit probe reached ", last, " from ", initial, " after ", steps, " steps");
}

TEST_CASE("history is ordered and the returned model is the best validation checkpoint") {
    const auto log = toy_log(8, 60);
    const auto schema = build_schema(std::span(log).first(fit_count(log.size(), 0.1)));
    auto config = small_config(Objective::rjcce);
    config.max_steps = 2000;
    config.eval_every = 25;
    config.patience = 4;
    config.learning_rate = 1e-2;  // large steps so validation loss turns up and stopping triggers
    const auto result = train(log, schema, config);
    const auto& records = result.history.records;
    REQUIRE_FALSE(records.empty());
    for (std::size_t i = 1; i < records.size(); ++i) CHECK(records[i].step > records[i - 1].step);
    double best = records[0].val_loss;
    long best_step = records[0].step;
    for (const auto& r : records) {
        if (r.val_loss < best) {
            best = r.val_loss;
            best_step = r.step;
        }
    }
    CHECK(result.history.best_step == best_step);
    CHECK(result.history.stopping_step == records.back().step);
    if (result.history.stopping_reason == "early_stopping") {
        CHECK(records.size() >= static_cast<std::size_t>(config.patience) + 1);
    }

    // Replaying up to the best step reproduces the returned parameters.
    auto replay = config;
    replay.max_steps = best_step;
    const auto prefix = train(log, schema, replay);
    CHECK(same_parameters(prefix.model, result.model));
    CHECK(prefix.history.records.back().val_loss == best);
}

TEST_CASE("dropout only acts while fitting") {
    const auto log = toy_log();
    const auto schema = build_schema(log);
    const auto index = index_log(log);
    auto config = small_config(Objective::rjcce);
    config.dropout_rate = 0.5;
    Rng rng(4);
    auto state = make_training_state(schema, config, rng);
    auto batch = sample_relaxed(index, 8, rng);
    vectorize_batch(batch, log, schema);
    const double a = batch_objective(state.model, batch, {}, config);
    const double b = batch_objective(state.model, batch, {}, config);
    CHECK(a == b);
    Rng d1(1), d2(2);
    CHECK(batch_objective(state.model, batch, {}, config, &d1) != batch_objective(state.model, batch, {}, config, &d2));
}

TEST_CASE("train rejects unordered logs and infeasible strict batches") {
    auto log = toy_log();
    const auto schema = build_schema(log);
    auto config = small_config(Objective::jcce);
    config.batch_size = 20;  // only 8 contents
    CHECK_THROWS_AS(train(log, schema, config), ConfigError);
    std::swap(log[0], log[5]);
    CHECK_THROWS_AS(train(log, schema, small_config(Objective::rjcce)), DataError);
}

TEST_CASE("ablate_to_single_viewer") {
    using V = std::vector<std::string>;
    Log log{oracle::make_event("g0", "u1", 0), oracle::make_event("g1", "u1", 1)};
    log[1].context["viewers"] = V{"u1", "u2"};
    log[1].context["hour"] = std::string("07");
    Rng rng(9);
    std::size_t first = 0;
    const int draws = 10000;
    for (int rep = 0; rep < draws; ++rep) {
        const auto out = ablate_to_single_viewer(log, rng);
        REQUIRE(out[0].context == log[0].context);
        const auto& v = std::get<V>(out[1].context.at("viewers"));
        REQUIRE(v.size() == 1);
        REQUIRE((v[0] == "u1" || v[0] == "u2"));
        REQUIRE(std::get<std::string>(out[1].context.at("hour")) == "07");
        REQUIRE(out[1].item == log[1].item);
        first += v[0] == "u1";
    }
    CHECK(std::abs(static_cast<double>(first) / draws - 0.5) <= 0.02);

    Log no_viewers{oracle::make_event("g0", "u1", 0)};
    no_viewers[0].context.erase("viewers");
    CHECK_THROWS_AS(ablate_to_single_viewer(no_viewers, rng), DataError);
}

}  // TEST_SUITE
