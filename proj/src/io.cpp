#include "jcce/io.hpp"

#include <fstream>
#include <sstream>

#include "jcce/csv.hpp"
#include "jcce/errors.hpp"

namespace jcce {

using nlohmann::json;

namespace {

const char* kind_name(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::categorical_single: return "categorical_single";
        case FeatureKind::categorical_multi: return "categorical_multi";
        case FeatureKind::numeric: return "numeric";
    }
    return "unknown";
}

FeatureKind kind_from_name(const std::string& s) {
    if (s == "categorical_single") return FeatureKind::categorical_single;
    if (s == "categorical_multi") return FeatureKind::categorical_multi;
    if (s == "numeric") return FeatureKind::numeric;
    throw DataError("unknown feature kind '" + s + "'");
}

json specs_to_json(const std::vector<FeatureSpec>& specs) {
    json arr = json::array();
    for (const auto& s : specs) {
        json j{{"name", s.name}, {"kind", kind_name(s.kind)}};
        if (s.kind == FeatureKind::numeric) {
            j["min"] = s.min;
            j["max"] = s.max;
        } else {
            j["vocabulary"] = s.vocabulary;
        }
        arr.push_back(std::move(j));
    }
    return arr;
}

std::vector<FeatureSpec> specs_from_json(const json& arr) {
    std::vector<FeatureSpec> specs;
    for (const auto& j : arr) {
        FeatureSpec s;
        s.name = j.at("name").get<std::string>();
        s.kind = kind_from_name(j.at("kind").get<std::string>());
        if (s.kind == FeatureKind::numeric) {
            s.min = j.at("min").get<double>();
            s.max = j.at("max").get<double>();
            if (!(s.min < s.max)) throw DataError("schema: numeric range of '" + s.name + "' is empty");
        } else {
            s.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
            if (s.vocabulary.empty() || !std::is_sorted(s.vocabulary.begin(), s.vocabulary.end())) {
                throw DataError("schema: vocabulary of '" + s.name + "' must be sorted and non-empty");
            }
        }
        specs.push_back(std::move(s));
    }
    return specs;
}

const char* activation_name(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

Activation activation_from_name(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "identity") return Activation::identity;
    throw DataError("unknown activation '" + s + "'");
}

template <typename F>
auto with_json_errors(const std::string& what, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw DataError(what + ": " + e.what());
    }
}

}  // namespace

void check_format_version(const json& doc, const std::string& what) {
    if (!doc.is_object() || !doc.contains("format_version")) {
        throw DataError(what + ": missing format_version");
    }
    const auto& v = doc.at("format_version");
    if (!v.is_number_integer() || v.get<int>() != kFormatVersion) {
        throw DataError(what + ": unsupported format_version " + v.dump() + " (expected " +
                        std::to_string(kFormatVersion) + ")");
    }
}

json attributes_to_json(const Attributes& attributes) {
    json j = json::object();
    for (const auto& [name, value] : attributes) {
        std::visit([&](const auto& v) { j[name] = v; }, value);
    }
    return j;
}

Attributes attributes_from_json(const json& doc) {
    if (!doc.is_object()) throw DataError("attributes must be a JSON object");
    Attributes attrs;
    for (const auto& [name, value] : doc.items()) {
        if (value.is_string()) {
            attrs[name] = value.get<std::string>();
        } else if (value.is_number()) {
            attrs[name] = value.get<double>();
        } else if (value.is_array()) {
            std::vector<std::string> vals;
            for (const auto& v : value) {
                if (!v.is_string()) throw DataError("attribute '" + name + "': set members must be strings");
                vals.push_back(v.get<std::string>());
            }
            attrs[name] = std::move(vals);
        } else {
            throw DataError("attribute '" + name + "' has unsupported type " + std::string(value.type_name()));
        }
    }
    return attrs;
}

json event_to_json(const ViewingEvent& event) {
    return json{{"format_version", kFormatVersion},
                {"timestamp", event.timestamp},
                {"duration_min", event.duration_min},
                {"item", attributes_to_json(event.item)},
                {"context", attributes_to_json(event.context)}};
}

ViewingEvent event_from_json(const json& doc) {
    check_format_version(doc, "dataset record");
    return with_json_errors("dataset record", [&] {
        ViewingEvent e;
        e.timestamp = doc.at("timestamp").get<std::int64_t>();
        e.duration_min = doc.at("duration_min").get<double>();
        e.item = attributes_from_json(doc.at("item"));
        e.context = attributes_from_json(doc.at("context"));
        return e;
    });
}

void write_dataset(std::ostream& out, std::span<const ViewingEvent> log) {
    for (const auto& e : log) out << event_to_json(e).dump() << '\n';
}

void write_dataset(const std::filesystem::path& path, std::span<const ViewingEvent> log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_dataset(out, log);
    if (!out) throw DataError("failed writing " + path.string());
}

Log read_dataset(std::istream& in) {
    Log log;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("dataset line " + std::to_string(line_no) + ": " + e.what());
        }
        log.push_back(event_from_json(doc));
    }
    return log;
}

Log read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read dataset " + path.string());
    return read_dataset(in);
}

json schema_to_json(const FeatureSchema& schema) {
    return json{{"context", specs_to_json(schema.context_specs)}, {"item", specs_to_json(schema.item_specs)}};
}

FeatureSchema schema_from_json(const json& doc) {
    return with_json_errors("schema", [&] {
        FeatureSchema s;
        s.context_specs = specs_from_json(doc.at("context"));
        s.item_specs = specs_from_json(doc.at("item"));
        return s;
    });
}

json encoder_to_json(const Encoder& encoder) {
    json arr = json::array();
    for (const auto& layer : encoder) {
        std::vector<double> w(layer.weights.data(), layer.weights.data() + layer.weights.size());
        std::vector<double> b(layer.biases.data(), layer.biases.data() + layer.biases.size());
        arr.push_back(json{{"activation", activation_name(layer.activation)},
                           {"rows", layer.weights.rows()},
                           {"cols", layer.weights.cols()},
                           {"weights", std::move(w)},
                           {"biases", std::move(b)}});
    }
    return arr;
}

Encoder encoder_from_json(const json& doc) {
    return with_json_errors("encoder", [&] {
        Encoder enc;
        for (const auto& j : doc) {
            LayerParams layer;
            layer.activation = activation_from_name(j.at("activation").get<std::string>());
            const auto rows = j.at("rows").get<Eigen::Index>();
            const auto cols = j.at("cols").get<Eigen::Index>();
            const auto w = j.at("weights").get<std::vector<double>>();
            const auto b = j.at("biases").get<std::vector<double>>();
            if (rows < 1 || cols < 1 || static_cast<Eigen::Index>(w.size()) != rows * cols ||
                static_cast<Eigen::Index>(b.size()) != rows) {
                throw DataError("encoder: parameter array sizes disagree with the declared shape");
            }
            layer.weights = Eigen::Map<const Matrix>(w.data(), rows, cols);
            layer.biases = Eigen::Map<const Vector>(b.data(), rows);
            enc.push_back(std::move(layer));
        }
        validate_encoder(enc);
        return enc;
    });
}

json checkpoint_to_json(const Checkpoint& c) {
    json items = json::array();
    for (const auto& it : c.catalog_items) items.push_back(attributes_to_json(it));
    const auto& cfg = c.model.config;
    return json{{"format_version", kFormatVersion},
                {"kind", "jcce-checkpoint"},
                {"objective", to_string(c.objective)},
                {"seed", c.seed},
                {"single_viewer", c.single_viewer},
                {"encoder_config",
                 {{"architecture", cfg.architecture == Architecture::linear ? "linear" : "mlp"},
                  {"hidden_widths", cfg.hidden_widths},
                  {"embedding_dim", cfg.embedding_dim}}},
                {"schema", schema_to_json(c.model.schema)},
                {"context_encoder", encoder_to_json(c.model.context_encoder)},
                {"item_encoder", encoder_to_json(c.model.item_encoder)},
                {"catalog", std::move(items)}};
}

Checkpoint checkpoint_from_json(const json& doc) {
    check_format_version(doc, "checkpoint");
    return with_json_errors("checkpoint", [&] {
        Checkpoint c;
        c.objective = objective_from_string(doc.at("objective").get<std::string>());
        c.seed = doc.at("seed").get<std::uint64_t>();
        c.single_viewer = doc.at("single_viewer").get<bool>();
        const auto& ec = doc.at("encoder_config");
        const auto arch = ec.at("architecture").get<std::string>();
        if (arch != "linear" && arch != "mlp") throw DataError("checkpoint: unknown architecture " + arch);
        c.model.config.architecture = arch == "linear" ? Architecture::linear : Architecture::mlp;
        c.model.config.hidden_widths = ec.at("hidden_widths").get<std::vector<std::size_t>>();
        c.model.config.embedding_dim = ec.at("embedding_dim").get<std::size_t>();
        c.model.schema = schema_from_json(doc.at("schema"));
        c.model.context_encoder = encoder_from_json(doc.at("context_encoder"));
        c.model.item_encoder = encoder_from_json(doc.at("item_encoder"));
        validate_model(c.model);
        for (const auto& it : doc.at("catalog")) c.catalog_items.push_back(attributes_from_json(it));
        return c;
    });
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    write_text_file(path, checkpoint_to_json(checkpoint).dump(1) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw DataError("checkpoint " + path.string() + ": " + e.what());
    }
    return checkpoint_from_json(doc);
}

void write_history_csv(std::ostream& out, const TrainHistory& history) {
    write_csv_row(out, {"step", "train_loss", "val_loss"});
    for (const auto& r : history.records) {
        write_csv_row(out, {std::to_string(r.step), format_double(r.train_loss), format_double(r.val_loss)});
    }
}

std::vector<std::string> report_csv_header(std::span<const std::size_t> ks) {
    std::vector<std::string> h{"model"};
    for (auto k : ks) h.push_back("HR@" + std::to_string(k));
    h.insert(h.end(), {"MRR", "AUC", "mean_position"});
    return h;
}

std::vector<std::string> report_csv_row(const std::string& model, const EvalReport& report,
                                        std::span<const std::size_t> ks) {
    std::vector<std::string> row{model};
    for (auto k : ks) row.push_back(format_double(report.hr.at(k)));
    row.push_back(format_double(report.mrr));
    row.push_back(format_double(report.auc));
    row.push_back(format_double(report.mean_position));
    return row;
}

json report_to_json(const std::string& model, const EvalReport& report) {
    json j{{"format_version", kFormatVersion},
           {"model", model},
           {"MRR", report.mrr},
           {"AUC", report.auc},
           {"mean_position", report.mean_position},
           {"count", report.count},
           {"num_items", report.num_items}};
    for (const auto& [k, v] : report.hr) j["HR@" + std::to_string(k)] = v;
    for (std::size_t p = 0; p < report.position_histogram.size(); ++p) {
        j["position_" + std::to_string(p + 1)] = report.position_histogram[p];
    }
    return j;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace jcce
