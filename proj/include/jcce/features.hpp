#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "jcce/nn.hpp"

namespace jcce {

/// One attribute value: a single category, a set of categories, or a number.
using AttributeValue = std::variant<std::string, std::vector<std::string>, double>;
using Attributes = std::map<std::string, AttributeValue>;

/// One observed context/content interaction.
struct ViewingEvent {
    Attributes item;
    Attributes context;
    std::int64_t timestamp = 0;  // epoch seconds
    double duration_min = 0.0;
};

using Log = std::vector<ViewingEvent>;

enum class FeatureKind { categorical_single, categorical_multi, numeric };

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::categorical_single;
    std::vector<std::string> vocabulary;  // sorted; categorical kinds only
    double min = 0.0;                     // numeric kind only
    double max = 0.0;

    std::size_t width() const { return kind == FeatureKind::numeric ? 1 : vocabulary.size(); }
    bool operator==(const FeatureSpec&) const = default;
};

struct FeatureSchema {
    std::vector<FeatureSpec> context_specs;
    std::vector<FeatureSpec> item_specs;

    std::size_t context_width() const;
    std::size_t item_width() const;
    bool operator==(const FeatureSchema&) const = default;
};

/// Vocabularies are the sorted distinct training values; numeric ranges are
/// the training extremes. Throws DataError on an empty log, on attributes
/// whose kind differs between events, and on constant numeric features.
FeatureSchema build_schema(std::span<const ViewingEvent> training_log);

/// Concatenated per-feature blocks: one-hot, L1-normalised multi-hot, or
/// min-max scaled and clamped numerics. Out-of-vocabulary and absent values
/// leave their block at zero; attribute names unknown to the schema throw.
Vector vectorize_attributes(const Attributes& attributes, std::span<const FeatureSpec> specs);
void vectorize_attributes_into(const Attributes& attributes, std::span<const FeatureSpec> specs,
                               Eigen::Ref<Vector> out);

Vector vectorize_context(const ViewingEvent& event, const FeatureSchema& schema);
Vector vectorize_item(const Attributes& item_attributes, const FeatureSchema& schema);

/// Row-wise vectorisation of selected events.
Matrix vectorize_contexts(std::span<const ViewingEvent> log, std::span<const std::size_t> rows,
                          const FeatureSchema& schema);
Matrix vectorize_items(std::span<const ViewingEvent> log, std::span<const std::size_t> rows,
                       const FeatureSchema& schema);

/// Order-independent identity string for an attribute map; multi-valued
/// attributes compare as sets.
std::string canonical_key(const Attributes& attributes);

}  // namespace jcce
