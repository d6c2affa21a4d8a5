#include "jcce/commands.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <set>

#include "jcce/analysis.hpp"
#include "jcce/csv.hpp"
#include "jcce/errors.hpp"

namespace jcce {

using nlohmann::json;

namespace {

/// Reads keys of one config section and rejects the ones nobody asked for.
class Section {
public:
    Section(const json& doc, std::string name) : doc_(doc), name_(std::move(name)) {
        if (!doc_.is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
    }

    template <typename T>
    void read(const char* key, T& out) {
        used_.insert(key);
        if (!doc_.contains(key)) return;
        try {
            out = doc_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("config " + name_ + "." + key + ": " + e.what());
        }
    }

    void mark(const char* key) { used_.insert(key); }

    void finish() const {
        for (const auto& [key, _] : doc_.items()) {
            if (!used_.count(key)) throw ConfigError("unknown config key " + name_ + "." + key);
        }
    }

private:
    const json& doc_;
    std::string name_;
    std::set<std::string> used_;
};

const json& section_or_empty(const json& doc, const char* key) {
    static const json empty = json::object();
    return doc.contains(key) ? doc.at(key) : empty;
}

std::string model_name(const Checkpoint& c) {
    return std::string(to_string(c.objective)) + (c.single_viewer ? "_1id" : "");
}

std::size_t viewer_count(const ViewingEvent& e) {
    const auto it = e.context.find("viewers");
    if (it == e.context.end()) return 0;
    if (const auto* v = std::get_if<std::vector<std::string>>(&it->second)) return v->size();
    return 1;
}

Log select_subset(const Log& log, const std::string& subset) {
    if (subset == "all") return log;
    if (subset != "solo" && subset != "coviewing") throw ConfigError("eval.subset must be all, solo or coviewing");
    Log out;
    for (const auto& e : log) {
        const bool social = viewer_count(e) > 1;
        if (social == (subset == "coviewing")) out.push_back(e);
    }
    return out;
}

struct LoadedRun {
    Checkpoint checkpoint;
    PreparedData data;
    Catalog catalog;
    Log test;  // restricted to the catalog
};

LoadedRun load_run(const RunConfig& config, const std::filesystem::path& checkpoint_path,
                   const std::filesystem::path& dataset_path) {
    LoadedRun run;
    run.checkpoint = load_checkpoint(checkpoint_path);
    const Log raw = read_dataset(dataset_path);
    run.data = prepare_data(raw, config.data);
    run.catalog = precompute_catalog(run.checkpoint.model, run.checkpoint.catalog_items);
    run.test = restrict_to_catalog(run.data.test, run.catalog);
    if (run.test.empty()) throw DataError("no test events with catalog items");
    return run;
}

}  // namespace

RunConfig run_config_from_json(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    if (doc.contains("format_version")) {
        const auto& v = doc.at("format_version");
        if (!v.is_number_integer() || v.get<int>() != kFormatVersion) {
            throw ConfigError("config: unsupported format_version " + v.dump());
        }
    }
    RunConfig c;
    Section top(doc, "config");
    int version = kFormatVersion;
    top.read("format_version", version);

    Section gen(section_or_empty(doc, "generator"), "generator");
    top.mark("generator");
    auto& g = c.generator;
    gen.read("n_households", g.n_households);
    gen.read("n_users", g.n_users);
    gen.read("n_genres", g.n_genres);
    gen.read("n_weeks", g.n_weeks);
    gen.read("events_per_day", g.events_per_day);
    gen.read("coviewing_prob", g.coviewing_prob);
    gen.read("habit_strength", g.habit_strength);
    gen.read("temporal_strength", g.temporal_strength);
    gen.read("popularity_skew", g.popularity_skew);
    gen.read("timeshift_prob", g.timeshift_prob);
    gen.read("seed", g.seed);
    gen.finish();

    Section data(section_or_empty(doc, "data"), "data");
    top.mark("data");
    data.read("min_duration_min", c.data.min_duration_min);
    data.read("min_item_count", c.data.min_item_count);
    data.read("train_fraction", c.data.train_fraction);
    data.finish();

    Section tr(section_or_empty(doc, "train"), "train");
    top.mark("train");
    auto& t = c.train;
    std::string objective = to_string(t.objective);
    std::string architecture = t.encoder.architecture == Architecture::linear ? "linear" : "mlp";
    tr.read("objective", objective);
    tr.read("batch_size", t.batch_size);
    tr.read("learning_rate", t.learning_rate);
    tr.read("beta1", t.beta1);
    tr.read("beta2", t.beta2);
    tr.read("eps", t.eps);
    tr.read("lambda", t.lambda);
    tr.read("dropout_rate", t.dropout_rate);
    tr.read("max_steps", t.max_steps);
    tr.read("eval_every", t.eval_every);
    tr.read("patience", t.patience);
    tr.read("validation_fraction", t.validation_fraction);
    tr.read("seed", t.seed);
    tr.read("architecture", architecture);
    tr.read("hidden_widths", t.encoder.hidden_widths);
    tr.read("embedding_dim", t.encoder.embedding_dim);
    tr.read("single_viewer", c.single_viewer);
    tr.finish();
    t.objective = objective_from_string(objective);
    if (architecture != "linear" && architecture != "mlp") throw ConfigError("train.architecture must be linear or mlp");
    t.encoder.architecture = architecture == "linear" ? Architecture::linear : Architecture::mlp;

    Section ev(section_or_empty(doc, "eval"), "eval");
    top.mark("eval");
    ev.read("ks", c.eval.ks);
    ev.read("baselines", c.eval.baselines);
    ev.read("subset", c.eval.subset);
    ev.read("seed", c.eval.seed);
    ev.finish();

    Section an(section_or_empty(doc, "analysis"), "analysis");
    top.mark("analysis");
    an.read("repetitions", c.analysis.repetitions);
    an.read("sample_size", c.analysis.sample_size);
    an.read("export_size", c.analysis.export_size);
    an.read("t_min", c.analysis.t_min);
    an.read("t_max", c.analysis.t_max);
    an.read("t_count", c.analysis.t_count);
    an.read("seed", c.analysis.seed);
    an.finish();
    top.finish();

    validate_generator_config(c.generator);
    validate_train_config(c.train);
    if (!(c.data.train_fraction > 0.0 && c.data.train_fraction < 1.0)) {
        throw ConfigError("data.train_fraction must lie in (0, 1)");
    }
    for (auto k : c.eval.ks) {
        if (k < 1) throw ConfigError("eval.ks entries must be at least 1");
    }
    if (c.eval.ks.empty()) throw ConfigError("eval.ks must not be empty");
    return c;
}

json run_config_to_json(const RunConfig& c) {
    const auto& g = c.generator;
    const auto& t = c.train;
    return json{
        {"format_version", kFormatVersion},
        {"generator",
         {{"n_households", g.n_households}, {"n_users", g.n_users}, {"n_genres", g.n_genres},
          {"n_weeks", g.n_weeks}, {"events_per_day", g.events_per_day}, {"coviewing_prob", g.coviewing_prob},
          {"habit_strength", g.habit_strength}, {"temporal_strength", g.temporal_strength},
          {"popularity_skew", g.popularity_skew}, {"timeshift_prob", g.timeshift_prob}, {"seed", g.seed}}},
        {"data",
         {{"min_duration_min", c.data.min_duration_min}, {"min_item_count", c.data.min_item_count},
          {"train_fraction", c.data.train_fraction}}},
        {"train",
         {{"objective", to_string(t.objective)}, {"batch_size", t.batch_size}, {"learning_rate", t.learning_rate},
          {"beta1", t.beta1}, {"beta2", t.beta2}, {"eps", t.eps}, {"lambda", t.lambda},
          {"dropout_rate", t.dropout_rate}, {"max_steps", t.max_steps}, {"eval_every", t.eval_every},
          {"patience", t.patience}, {"validation_fraction", t.validation_fraction}, {"seed", t.seed},
          {"architecture", t.encoder.architecture == Architecture::linear ? "linear" : "mlp"},
          {"hidden_widths", t.encoder.hidden_widths}, {"embedding_dim", t.encoder.embedding_dim},
          {"single_viewer", c.single_viewer}}},
        {"eval", {{"ks", c.eval.ks}, {"baselines", c.eval.baselines}, {"subset", c.eval.subset}, {"seed", c.eval.seed}}},
        {"analysis",
         {{"repetitions", c.analysis.repetitions}, {"sample_size", c.analysis.sample_size},
          {"export_size", c.analysis.export_size}, {"t_min", c.analysis.t_min}, {"t_max", c.analysis.t_max},
          {"t_count", c.analysis.t_count}, {"seed", c.analysis.seed}}}};
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return run_config_from_json(doc);
}

PreparedData prepare_data(std::span<const ViewingEvent> raw, const DataConfig& config) {
    const std::size_t min_count =
        config.min_item_count > 0 ? config.min_item_count : default_min_item_count(raw.size());
    const Log filtered = filter_log(raw, config.min_duration_min, min_count);
    auto [train, test] = temporal_split(filtered, config.train_fraction);
    return {std::move(train), std::move(test)};
}

FeatureSchema fit_schema(std::span<const ViewingEvent> train_log, const TrainConfig& config) {
    return build_schema(train_log.first(fit_count(train_log.size(), config.validation_fraction)));
}

void cmd_gen(const RunConfig& config, const std::filesystem::path& out_path) {
    write_dataset(out_path, generate(config.generator));
}

TrainOutputs cmd_train(const RunConfig& config, const std::filesystem::path& dataset_path,
                       const std::filesystem::path& checkpoint_out, const std::filesystem::path& history_out) {
    const Log raw = read_dataset(dataset_path);
    PreparedData data = prepare_data(raw, config.data);
    if (config.single_viewer) {
        Rng ablation_rng = Rng(config.train.seed).fork(99);
        data.train = ablate_to_single_viewer(data.train, ablation_rng);
    }
    const FeatureSchema schema = fit_schema(data.train, config.train);
    TrainResult result = train(data.train, schema, config.train);

    TrainOutputs out;
    out.checkpoint.model = std::move(result.model);
    out.checkpoint.objective = config.train.objective;
    out.checkpoint.seed = config.train.seed;
    out.checkpoint.single_viewer = config.single_viewer;
    out.checkpoint.catalog_items = distinct_items(data.train);
    out.history = std::move(result.history);
    save_checkpoint(out.checkpoint, checkpoint_out);

    std::ofstream hist(history_out, std::ios::binary);
    if (!hist) throw DataError("cannot write " + history_out.string());
    write_history_csv(hist, out.history);
    return out;
}

void cmd_eval(const RunConfig& config, const std::filesystem::path& checkpoint_path,
              const std::filesystem::path& dataset_path, const std::filesystem::path& report_out,
              const std::optional<std::filesystem::path>& json_out) {
    const LoadedRun run = load_run(config, checkpoint_path, dataset_path);
    const Log test = select_subset(run.test, config.eval.subset);
    if (test.empty()) throw DataError("test subset '" + config.eval.subset + "' is empty");
    const auto& ks = config.eval.ks;

    std::vector<std::pair<std::string, EvalReport>> reports;
    ModelRanker model_ranker(run.checkpoint.model, run.catalog);
    reports.emplace_back(model_name(run.checkpoint), evaluate(model_ranker, test, run.catalog, ks));
    if (config.eval.baselines) {
        RandomRanker random(run.catalog.size(), Rng(config.eval.seed));
        reports.emplace_back("random", evaluate(random, test, run.catalog, ks));
        auto pop = toppop(run.data.train, run.catalog);
        reports.emplace_back("toppop", evaluate(pop, test, run.catalog, ks));
        auto pop_temp = toppop_temporal(run.data.train, run.catalog);
        reports.emplace_back("toppop_temp", evaluate(pop_temp, test, run.catalog, ks));
    }

    std::ofstream out(report_out, std::ios::binary);
    if (!out) throw DataError("cannot write " + report_out.string());
    write_csv_row(out, report_csv_header(ks));
    for (const auto& [name, report] : reports) write_csv_row(out, report_csv_row(name, report, ks));
    if (!out) throw DataError("failed writing " + report_out.string());

    if (json_out) {
        json docs = json::array();
        for (const auto& [name, report] : reports) docs.push_back(report_to_json(name, report));
        write_text_file(*json_out, docs.dump(1) + "\n");
    }
}

std::string item_label(const Attributes& item) {
    if (item.size() == 1) {
        if (const auto* s = std::get_if<std::string>(&item.begin()->second)) return *s;
    }
    return canonical_key(item);
}

void cmd_recommend(const std::filesystem::path& checkpoint_path, const std::filesystem::path& context_path,
                   std::size_t top_k, std::ostream& out) {
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    json doc;
    try {
        doc = json::parse(read_text_file(context_path));
    } catch (const json::exception& e) {
        throw DataError("context document: " + std::string(e.what()));
    }
    const json& ctx = doc.is_object() && doc.contains("context") ? doc.at("context") : doc;
    const Catalog catalog = precompute_catalog(ckpt.model, ckpt.catalog_items);
    const auto list = recommend(ckpt.model, attributes_from_json(ctx), catalog);
    const std::size_t n = std::min(top_k, catalog.size());
    for (std::size_t r = 0; r < n; ++r) {
        out << item_label(catalog.items[list.ranked_item_indices[r]]) << '\t' << format_double(list.scores[r]) << '\n';
    }
}

AnalysisMode analysis_mode_from_string(const std::string& name) {
    if (name == "snnm") return AnalysisMode::snnm;
    if (name == "simmatrix") return AnalysisMode::simmatrix;
    if (name == "export") return AnalysisMode::export_embeddings;
    throw ConfigError("unknown analysis mode '" + name + "' (expected snnm, simmatrix or export)");
}

void cmd_analyze(const RunConfig& config, const std::filesystem::path& checkpoint_path,
                 const std::filesystem::path& dataset_path, AnalysisMode mode, const std::filesystem::path& out_path) {
    const LoadedRun run = load_run(config, checkpoint_path, dataset_path);
    const auto& model = run.checkpoint.model;
    const auto& ac = config.analysis;
    Rng rng(ac.seed);

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw DataError("cannot write " + out_path.string());

    switch (mode) {
        case AnalysisMode::snnm: {
            const auto all = context_embeddings(run.test, model, run.catalog);
            const std::size_t n = std::min(ac.sample_size, all.size());
            const auto grid = log_grid(ac.t_min, ac.t_max, ac.t_count);
            const auto curve = snnm_sweep(all, grid, ac.repetitions, n, rng);
            write_csv_row(out, {"T", "mean", "ci95", "skipped"});
            for (std::size_t i = 0; i < grid.size(); ++i) {
                write_csv_row(out, {format_double(curve.temperatures[i]), format_double(curve.means[i]),
                                    format_double(curve.ci95[i]), std::to_string(curve.skipped[i])});
            }
            break;
        }
        case AnalysisMode::simmatrix: {
            const auto sim = similarity_matrix(run.test, model, run.catalog);
            std::vector<std::string> header{"content"};
            for (const auto& item : run.catalog.items) header.push_back(item_label(item));
            header.push_back("dispersion");
            write_csv_row(out, header);
            for (std::size_t i = 0; i < run.catalog.size(); ++i) {
                std::vector<std::string> row{item_label(run.catalog.items[i])};
                for (std::size_t j = 0; j < run.catalog.size(); ++j) {
                    row.push_back(sim.present[i] ? format_double(sim.values(static_cast<Eigen::Index>(i),
                                                                            static_cast<Eigen::Index>(j)))
                                                 : "");
                }
                row.push_back(sim.present[i] ? format_double(sim.dispersion[i]) : "");
                write_csv_row(out, row);
            }
            break;
        }
        case AnalysisMode::export_embeddings: {
            std::vector<std::size_t> rows(run.test.size());
            for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
            if (ac.export_size > 0 && ac.export_size < rows.size()) {
                rng.shuffle(rows.begin(), rows.end());
                rows.resize(ac.export_size);
                std::sort(rows.begin(), rows.end());
            }
            Matrix emb(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(model.config.embedding_dim));
            std::vector<std::string> labels;
            for (std::size_t r = 0; r < rows.size(); ++r) {
                const auto& e = run.test[rows[r]];
                emb.row(static_cast<Eigen::Index>(r)) = embed_context(model, vectorize_context(e, model.schema)).transpose();
                labels.push_back(item_label(e.item));
            }
            out.close();
            export_embeddings(emb, labels, out_path);
            break;
        }
    }
}

}  // namespace jcce
