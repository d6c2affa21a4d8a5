#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "jcce/commands.hpp"
#include "jcce/csv.hpp"
#include "jcce/errors.hpp"
#include "jcce/io.hpp"
#include "support/oracles.hpp"

using namespace jcce;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "jcce_io_test";
    fs::create_directories(dir);
    return dir / name;
}

bool events_equal(const ViewingEvent& a, const ViewingEvent& b) {
    return a.item == b.item && a.context == b.context && a.timestamp == b.timestamp &&
           a.duration_min == b.duration_min;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("format_double round-trips and parse_double is strict") {
    Rng rng(1);
    for (int rep = 0; rep < 10000; ++rep) {
        const double x = rng.normal() * std::exp(rng.uniform(-30.0, 30.0));
        REQUIRE(parse_double(format_double(x)) == x);
    }
    CHECK(parse_double("0.5") == 0.5);
    CHECK_THROWS_AS(parse_double("0.5x"), DataError);
    CHECK_THROWS_AS(parse_double(""), DataError);
}

TEST_CASE("csv quoting round-trips") {
    std::ostringstream out;
    write_csv_row(out, {"plain", "with,comma", "with \"quote\"", "line\nbreak", ""});
    std::istringstream in(out.str());
    const auto rows = read_csv(in);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0] == std::vector<std::string>{"plain", "with,comma", "with \"quote\"", "line\nbreak", ""});
}

TEST_CASE("dataset round-trip and format") {
    GeneratorConfig g;
    g.n_weeks = 1;
    g.events_per_day = 50;
    const auto log = generate(g);
    std::stringstream buf;
    write_dataset(buf, log);
    const std::string text = buf.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(log.size()));
    const auto first_line = text.substr(0, text.find('\n'));
    // Keys in lexicographic order.
    CHECK(first_line.find("\"context\"") < first_line.find("\"duration_min\""));
    CHECK(first_line.find("\"duration_min\"") < first_line.find("\"format_version\""));
    CHECK(first_line.find("\"item\"") < first_line.find("\"timestamp\""));
    const auto back = read_dataset(buf);
    REQUIRE(back.size() == log.size());
    for (std::size_t i = 0; i < log.size(); ++i) REQUIRE(events_equal(back[i], log[i]));

    std::stringstream empty;
    write_dataset(empty, Log{});
    CHECK(empty.str().empty());
}

TEST_CASE("dataset reader rejects bad versions and malformed lines") {
    std::istringstream bad_version(
        R"({"context":{},"duration_min":5,"format_version":2,"item":{"genre":"a"},"timestamp":1})" "\n");
    CHECK_THROWS_AS(read_dataset(bad_version), DataError);
    std::istringstream garbage("not json\n");
    CHECK_THROWS_AS(read_dataset(garbage), DataError);
    CHECK_THROWS_AS(read_dataset(fs::path("/nonexistent/data.jsonl")), DataError);
}

TEST_CASE("checkpoint round-trip reproduces serving scores") {
    Rng rng(2);
    auto log = oracle::separable_log(5, 4, rng);
    for (auto& e : log) e.context["age"] = rng.uniform(0.0, 90.0);
    Checkpoint ckpt;
    ckpt.model = init_model(build_schema(log), EncoderConfig{Architecture::mlp, {7, 5}, 4}, rng);
    ckpt.objective = Objective::bpr;
    ckpt.seed = 1234567890123ULL;
    ckpt.single_viewer = true;
    ckpt.catalog_items = distinct_items(log);
    const auto path = scratch("ckpt.json");
    save_checkpoint(ckpt, path);
    const auto back = load_checkpoint(path);
    CHECK(back.objective == Objective::bpr);
    CHECK(back.seed == ckpt.seed);
    CHECK(back.single_viewer);
    CHECK(back.model.schema == ckpt.model.schema);
    CHECK(back.model.config == ckpt.model.config);
    for (std::size_t l = 0; l < ckpt.model.context_encoder.size(); ++l) {
        CHECK(back.model.context_encoder[l].weights == ckpt.model.context_encoder[l].weights);
        CHECK(back.model.item_encoder[l].biases == ckpt.model.item_encoder[l].biases);
    }
    const auto cat_a = precompute_catalog(ckpt.model, ckpt.catalog_items);
    const auto cat_b = precompute_catalog(back.model, back.catalog_items);
    for (const auto& e : log) {
        const auto a = recommend(ckpt.model, e.context, cat_a);
        const auto b = recommend(back.model, e.context, cat_b);
        REQUIRE(a.ranked_item_indices == b.ranked_item_indices);
        for (std::size_t j = 0; j < a.scores.size(); ++j) REQUIRE(std::abs(a.scores[j] - b.scores[j]) <= 1e-12);
    }

    auto doc = checkpoint_to_json(ckpt);
    doc["format_version"] = 99;
    CHECK_THROWS_AS(checkpoint_from_json(doc), DataError);
    CHECK_THROWS_AS(load_checkpoint(scratch("missing.json")), DataError);
}

TEST_CASE("report CSV columns") {
    const std::vector<std::size_t> ks{1, 3, 5};
    CHECK(report_csv_header(ks) ==
          std::vector<std::string>{"model", "HR@1", "HR@3", "HR@5", "MRR", "AUC", "mean_position"});
    const auto r = metrics(std::vector<std::size_t>{1, 2, 4}, 5, ks);
    const auto row = report_csv_row("x", r, ks);
    CHECK(row.size() == 7);
    CHECK(parse_double(row[5]) == r.auc);
    const auto doc = report_to_json("x", r);
    CHECK(doc.at("model") == "x");
    CHECK(doc.at("format_version") == kFormatVersion);
}

TEST_CASE("run config: defaults, overrides and unknown keys") {
    const auto defaults = run_config_from_json(nlohmann::json::object());
    CHECK(defaults.train.objective == Objective::rjcce);
    CHECK(defaults.eval.ks == std::vector<std::size_t>{1, 3});
    const auto round = run_config_from_json(run_config_to_json(defaults));
    CHECK(run_config_to_json(round) == run_config_to_json(defaults));

    const auto c = run_config_from_json(nlohmann::json::parse(
        R"({"train": {"objective": "bpr", "hidden_widths": [8]}, "generator": {"n_genres": 5}})"));
    CHECK(c.train.objective == Objective::bpr);
    CHECK(c.train.encoder.hidden_widths == std::vector<std::size_t>{8});
    CHECK(c.generator.n_genres == 5);

    CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"trian": {}})")), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"train": {"lr": 1}})")), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"train": {"max_steps": "many"}})")), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"format_version": 7})")), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"eval": {"ks": [0]}})")), ConfigError);
}

}  // TEST_SUITE
