#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "jcce/features.hpp"
#include "jcce/nn.hpp"

namespace jcce {

enum class Architecture { linear, mlp };

struct EncoderConfig {
    Architecture architecture = Architecture::mlp;
    std::vector<std::size_t> hidden_widths{250, 250};  // ignored for linear
    std::size_t embedding_dim = 50;

    bool operator==(const EncoderConfig&) const = default;
};

/// Context encoder and content encoder sharing one E-dimensional output space.
struct JcceModel {
    FeatureSchema schema;
    EncoderConfig config;
    Encoder context_encoder;
    Encoder item_encoder;
};

/// Xavier-initialised encoders sized for `schema`. The context encoder is
/// drawn first, then the item encoder, from the same stream.
JcceModel init_model(const FeatureSchema& schema, const EncoderConfig& config, Rng& rng);

/// Throws ShapeError if encoder widths disagree with the schema or with each other.
void validate_model(const JcceModel& model);

Vector embed_context(const JcceModel& model, const Vector& context_vector);
Vector embed_item(const JcceModel& model, const Vector& item_vector);

/// Cosine similarity clamped to [-1, 1]; 0 when either norm is below 1e-12.
double relevance(const Vector& context_embedding, const Vector& item_embedding);

/// Static content embeddings used at serving time.
struct Catalog {
    std::vector<Attributes> items;
    std::vector<std::string> keys;  // canonical_key of each item
    Matrix embeddings;              // M x E, row j embeds items[j]

    std::size_t size() const { return items.size(); }
    std::optional<std::size_t> index_of(const Attributes& item) const;
    std::optional<std::size_t> index_of_key(const std::string& key) const;

    std::unordered_map<std::string, std::size_t> lookup;
};

/// Distinct item descriptors of a log, ordered by canonical key.
std::vector<Attributes> distinct_items(std::span<const ViewingEvent> log);

/// Throws DataError for fewer than two items or duplicate descriptors.
Catalog precompute_catalog(const JcceModel& model, std::vector<Attributes> items);

struct RecommendationList {
    std::vector<std::size_t> ranked_item_indices;  // 0-based catalog indices
    std::vector<double> scores;                    // non-increasing
};

/// Sort by descending score, ties by ascending index.
RecommendationList rank_scores(const std::vector<double>& scores);

/// One context-encoder pass, then cosine against every catalog row.
RecommendationList recommend(const JcceModel& model, const Attributes& context, const Catalog& catalog);

}  // namespace jcce
