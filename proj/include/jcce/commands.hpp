#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "jcce/datagen.hpp"
#include "jcce/io.hpp"
#include "jcce/trainer.hpp"

namespace jcce {

struct DataConfig {
    double min_duration_min = 3.0;
    std::size_t min_item_count = 0;  // 0: 1% of the dataset
    double train_fraction = 0.9;
};

struct EvalConfig {
    std::vector<std::size_t> ks{1, 3};
    bool baselines = true;
    std::string subset = "all";  // all | solo | coviewing
    std::uint64_t seed = 11;
};

struct AnalysisConfig {
    std::size_t repetitions = 20;
    std::size_t sample_size = 512;  // snnm sample; export uses 0 = every test event
    std::size_t export_size = 0;
    double t_min = 1e-2;
    double t_max = 1e2;
    std::size_t t_count = 20;
    std::uint64_t seed = 13;
};

/// Every setting of the pipeline. Loaded from a JSON document whose sections
/// and keys are all optional; unknown keys are rejected.
struct RunConfig {
    GeneratorConfig generator;
    DataConfig data;
    TrainConfig train;
    bool single_viewer = false;  // apply the one-viewer ablation before training
    EvalConfig eval;
    AnalysisConfig analysis;
};

RunConfig run_config_from_json(const nlohmann::json& doc);
nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);

/// Filtered dataset split into training and test portions.
struct PreparedData {
    Log train;
    Log test;
};
PreparedData prepare_data(std::span<const ViewingEvent> raw, const DataConfig& config);

/// Schema from the fit portion of the training log (validation excluded).
FeatureSchema fit_schema(std::span<const ViewingEvent> train_log, const TrainConfig& config);

/// Generate the synthetic dataset.
void cmd_gen(const RunConfig& config, const std::filesystem::path& out_path);

struct TrainOutputs {
    Checkpoint checkpoint;
    TrainHistory history;
};
/// Filter, split, (optionally ablate), train, then write checkpoint and history CSV.
TrainOutputs cmd_train(const RunConfig& config, const std::filesystem::path& dataset_path,
                       const std::filesystem::path& checkpoint_out, const std::filesystem::path& history_out);

/// Evaluate the checkpoint (and baselines when enabled) on the test split.
/// Writes one CSV row per method; also the flat JSON documents when json_out is set.
void cmd_eval(const RunConfig& config, const std::filesystem::path& checkpoint_path,
              const std::filesystem::path& dataset_path, const std::filesystem::path& report_out,
              const std::optional<std::filesystem::path>& json_out = std::nullopt);

/// Prints "item<TAB>score" lines for the top_k items.
void cmd_recommend(const std::filesystem::path& checkpoint_path, const std::filesystem::path& context_path,
                   std::size_t top_k, std::ostream& out);

enum class AnalysisMode { snnm, simmatrix, export_embeddings };
AnalysisMode analysis_mode_from_string(const std::string& name);

void cmd_analyze(const RunConfig& config, const std::filesystem::path& checkpoint_path,
                 const std::filesystem::path& dataset_path, AnalysisMode mode, const std::filesystem::path& out_path);

/// Human-readable label of a catalog item (its value when it has one attribute).
std::string item_label(const Attributes& item);

}  // namespace jcce
