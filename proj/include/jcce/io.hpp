#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "jcce/evaluation.hpp"
#include "jcce/model.hpp"
#include "jcce/trainer.hpp"

namespace jcce {

inline constexpr int kFormatVersion = 1;

/// Throws DataError unless `doc["format_version"]` equals kFormatVersion.
void check_format_version(const nlohmann::json& doc, const std::string& what);

nlohmann::json attributes_to_json(const Attributes& attributes);
Attributes attributes_from_json(const nlohmann::json& doc);

/// One dataset record: context, duration_min, format_version, item, timestamp.
nlohmann::json event_to_json(const ViewingEvent& event);
ViewingEvent event_from_json(const nlohmann::json& doc);

/// Line-delimited records, keys in lexicographic order, one event per line.
void write_dataset(std::ostream& out, std::span<const ViewingEvent> log);
void write_dataset(const std::filesystem::path& path, std::span<const ViewingEvent> log);
Log read_dataset(std::istream& in);
Log read_dataset(const std::filesystem::path& path);

nlohmann::json schema_to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const nlohmann::json& doc);

nlohmann::json encoder_to_json(const Encoder& encoder);
Encoder encoder_from_json(const nlohmann::json& doc);

struct Checkpoint {
    JcceModel model;
    Objective objective = Objective::rjcce;
    std::uint64_t seed = 0;
    bool single_viewer = false;
    std::vector<Attributes> catalog_items;
};

nlohmann::json checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const nlohmann::json& doc);
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// "step,train_loss,val_loss" rows.
void write_history_csv(std::ostream& out, const TrainHistory& history);

/// Header "model,HR@K...,MRR,AUC,mean_position".
std::vector<std::string> report_csv_header(std::span<const std::size_t> ks);
std::vector<std::string> report_csv_row(const std::string& model, const EvalReport& report,
                                        std::span<const std::size_t> ks);
/// Flat key-value document for a single report.
nlohmann::json report_to_json(const std::string& model, const EvalReport& report);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace jcce
