// jcce: generate logs, train, evaluate, recommend and analyze from the command line.
//
// Exit status: 0 success, 2 configuration error, 3 data error, 4 numeric failure, 1 anything else.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jcce/commands.hpp"
#include "jcce/errors.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> objective;
    std::vector<std::size_t> ks;
    bool single_viewer = false;
    std::optional<bool> baselines;
    std::optional<std::string> subset;
};

jcce::RunConfig resolve(const Overrides& o, bool seed_is_generator) {
    jcce::RunConfig c = o.config_path.empty() ? jcce::RunConfig{} : jcce::load_run_config(o.config_path);
    if (o.seed) {
        if (seed_is_generator) {
            c.generator.seed = *o.seed;
        } else {
            c.train.seed = *o.seed;
        }
    }
    if (o.objective) c.train.objective = jcce::objective_from_string(*o.objective);
    if (!o.ks.empty()) c.eval.ks = o.ks;
    if (o.single_viewer) c.single_viewer = true;
    if (o.baselines) c.eval.baselines = *o.baselines;
    if (o.subset) c.eval.subset = *o.subset;
    jcce::validate_train_config(c.train);
    for (auto k : c.eval.ks) {
        if (k < 1) throw jcce::ConfigError("--Ks entries must be at least 1");
    }
    return c;
}

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "JSON run configuration");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Context-aware two-tower TV recommender"};
    app.require_subcommand(1);
    Overrides o;
    std::string out, dataset, checkpoint, history, json_out, mode, context;
    std::size_t top_k = 10;

    auto* gen = app.add_subcommand("gen", "Generate a synthetic viewing log");
    add_common(gen, o);
    gen->add_option("--seed", o.seed, "Generator seed (overrides config)");
    gen->add_option("--out", out, "Dataset output path")->required();

    auto* train = app.add_subcommand("train", "Train a model on a dataset");
    add_common(train, o);
    train->add_option("--seed", o.seed, "Training seed (overrides config)");
    train->add_option("--objective", o.objective, "jcce, rjcce, ljcce or bpr");
    train->add_flag("--1id", o.single_viewer, "Collapse every viewer set to one random member before training");
    train->add_option("--dataset", dataset, "Dataset path")->required();
    train->add_option("--checkpoint", checkpoint, "Checkpoint output path")->required();
    train->add_option("--history", history, "Training history CSV path")->required();

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint and baselines on the test split");
    add_common(eval, o);
    eval->add_option("--Ks", o.ks, "Cutoffs for HR@K")->delimiter(',');
    eval->add_option("--baselines", o.baselines, "Also evaluate random, toppop and toppop_temp (true/false)");
    eval->add_option("--subset", o.subset, "all, solo or coviewing");
    eval->add_option("--checkpoint", checkpoint, "Checkpoint path")->required();
    eval->add_option("--dataset", dataset, "Dataset path")->required();
    eval->add_option("--out", out, "Report CSV path")->required();
    eval->add_option("--json", json_out, "Optional report JSON path");

    auto* rec = app.add_subcommand("recommend", "Rank the catalog for one context");
    rec->add_option("--checkpoint", checkpoint, "Checkpoint path")->required();
    rec->add_option("--context", context, "JSON context document")->required();
    rec->add_option("--top-k", top_k, "Number of items to print");

    auto* analyze = app.add_subcommand("analyze", "Embedding analyses");
    add_common(analyze, o);
    analyze->add_option("--mode", mode, "snnm, simmatrix or export")->required();
    analyze->add_option("--checkpoint", checkpoint, "Checkpoint path")->required();
    analyze->add_option("--dataset", dataset, "Dataset path")->required();
    analyze->add_option("--out", out, "Output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*gen) {
            jcce::cmd_gen(resolve(o, true), out);
        } else if (*train) {
            jcce::cmd_train(resolve(o, false), dataset, checkpoint, history);
        } else if (*eval) {
            std::optional<std::filesystem::path> json_path;
            if (!json_out.empty()) json_path = json_out;
            jcce::cmd_eval(resolve(o, false), checkpoint, dataset, out, json_path);
        } else if (*rec) {
            jcce::cmd_recommend(checkpoint, context, top_k, std::cout);
        } else if (*analyze) {
            const auto m = jcce::analysis_mode_from_string(mode);
            jcce::cmd_analyze(resolve(o, false), checkpoint, dataset, m, out);
        }
    } catch (const jcce::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const jcce::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const jcce::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
