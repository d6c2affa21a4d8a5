#include "jcce/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jcce/errors.hpp"

namespace jcce {

JcceModel init_model(const FeatureSchema& schema, const EncoderConfig& config, Rng& rng) {
    if (config.embedding_dim == 0) throw std::invalid_argument("init_model: embedding_dim must be >= 1");
    JcceModel model;
    model.schema = schema;
    model.config = config;
    const std::vector<std::size_t> hidden =
        config.architecture == Architecture::linear ? std::vector<std::size_t>{} : config.hidden_widths;
    for (std::size_t w : hidden) {
        if (w == 0) throw std::invalid_argument("init_model: hidden widths must be positive");
    }
    model.context_encoder = make_encoder(schema.context_width(), hidden, config.embedding_dim, rng);
    model.item_encoder = make_encoder(schema.item_width(), hidden, config.embedding_dim, rng);
    return model;
}

void validate_model(const JcceModel& model) {
    if (encoder_input_dim(model.context_encoder) != model.schema.context_width()) {
        throw ShapeError("context encoder input width does not match the schema");
    }
    if (encoder_input_dim(model.item_encoder) != model.schema.item_width()) {
        throw ShapeError("item encoder input width does not match the schema");
    }
    if (encoder_output_dim(model.context_encoder) != model.config.embedding_dim ||
        encoder_output_dim(model.item_encoder) != model.config.embedding_dim) {
        throw ShapeError("encoder output width differs from embedding_dim");
    }
}

Vector embed_context(const JcceModel& model, const Vector& context_vector) {
    return encoder_predict(model.context_encoder, context_vector);
}

Vector embed_item(const JcceModel& model, const Vector& item_vector) {
    return encoder_predict(model.item_encoder, item_vector);
}

double relevance(const Vector& context_embedding, const Vector& item_embedding) {
    if (context_embedding.size() != item_embedding.size()) {
        throw ShapeError("relevance: embedding lengths differ");
    }
    const double na = context_embedding.norm();
    const double nb = item_embedding.norm();
    if (na < 1e-12 || nb < 1e-12) return 0.0;
    return std::clamp(context_embedding.dot(item_embedding) / (na * nb), -1.0, 1.0);
}

std::optional<std::size_t> Catalog::index_of_key(const std::string& key) const {
    const auto it = lookup.find(key);
    if (it == lookup.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> Catalog::index_of(const Attributes& item) const {
    return index_of_key(canonical_key(item));
}

std::vector<Attributes> distinct_items(std::span<const ViewingEvent> log) {
    std::map<std::string, const Attributes*> seen;
    for (const auto& e : log) seen.try_emplace(canonical_key(e.item), &e.item);
    std::vector<Attributes> items;
    items.reserve(seen.size());
    for (const auto& [_, attrs] : seen) items.push_back(*attrs);
    return items;
}

Catalog precompute_catalog(const JcceModel& model, std::vector<Attributes> items) {
    if (items.size() < 2) throw DataError("invalid catalog: need at least two items");
    Catalog catalog;
    catalog.items = std::move(items);
    catalog.embeddings.resize(static_cast<Eigen::Index>(catalog.items.size()),
                              static_cast<Eigen::Index>(model.config.embedding_dim));
    for (std::size_t j = 0; j < catalog.items.size(); ++j) {
        auto key = canonical_key(catalog.items[j]);
        if (!catalog.lookup.emplace(key, j).second) {
            throw DataError("invalid catalog: duplicate item descriptor " + key);
        }
        catalog.keys.push_back(std::move(key));
        const Vector emb = embed_item(model, vectorize_item(catalog.items[j], model.schema));
        if (emb.size() != catalog.embeddings.cols()) throw ShapeError("catalog: item embedding width");
        catalog.embeddings.row(static_cast<Eigen::Index>(j)) = emb.transpose();
    }
    return catalog;
}

RecommendationList rank_scores(const std::vector<double>& scores) {
    RecommendationList list;
    list.ranked_item_indices.resize(scores.size());
    std::iota(list.ranked_item_indices.begin(), list.ranked_item_indices.end(), std::size_t{0});
    std::stable_sort(list.ranked_item_indices.begin(), list.ranked_item_indices.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    list.scores.reserve(scores.size());
    for (std::size_t idx : list.ranked_item_indices) list.scores.push_back(scores[idx]);
    return list;
}

RecommendationList recommend(const JcceModel& model, const Attributes& context, const Catalog& catalog) {
    const Vector ctx = embed_context(model, vectorize_attributes(context, model.schema.context_specs));
    std::vector<double> scores(catalog.size());
    for (std::size_t j = 0; j < catalog.size(); ++j) {
        scores[j] = relevance(ctx, catalog.embeddings.row(static_cast<Eigen::Index>(j)).transpose());
    }
    return rank_scores(scores);
}

}  // namespace jcce
