#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "jcce/features.hpp"
#include "jcce/losses.hpp"

namespace jcce {

/// Content identity and context identity for every event of a log.
struct ContentIndex {
    std::vector<std::string> item_keys;                // distinct contents, sorted
    std::vector<std::size_t> content_of_event;         // event -> content id
    std::vector<std::vector<std::size_t>> events_of_content;
    std::vector<std::string> context_key_of_event;

    std::size_t num_events() const { return content_of_event.size(); }
    std::size_t num_contents() const { return item_keys.size(); }
};

ContentIndex index_log(std::span<const ViewingEvent> log);

/// Observed (full context tuple, content) pairs of a training log.
class PairIndex {
public:
    PairIndex() = default;
    explicit PairIndex(const ContentIndex& index);

    bool contains(const std::string& context_key, const std::string& item_key) const;
    std::size_t size() const { return pairs_.size(); }

private:
    std::unordered_set<std::string> pairs_;
};

struct MiniBatch {
    std::vector<std::size_t> rows;         // event indices into the log
    std::vector<std::size_t> content_ids;  // per row
    PositiveGroups groups;
    Matrix context_vectors;  // filled by vectorize_batch
    Matrix item_vectors;

    std::size_t size() const { return rows.size(); }
};

/// X_i = rows whose content equals row i's content.
PositiveGroups group_positives(std::span<const std::size_t> content_ids);

/// N distinct contents chosen uniformly, then one event uniformly within each.
/// Throws std::invalid_argument if N exceeds the number of distinct contents.
MiniBatch sample_npairs(const ContentIndex& index, std::size_t n, Rng& rng);

/// N events drawn uniformly with replacement.
MiniBatch sample_relaxed(const ContentIndex& index, std::size_t n, Rng& rng);

void vectorize_batch(MiniBatch& batch, std::span<const ViewingEvent> log, const FeatureSchema& schema);

/// Uniform choice among batch rows whose content differs from row i's and was
/// never observed with row i's context. nullopt when no row qualifies; the
/// caller should then draw a fresh batch.
std::optional<std::size_t> bpr_negative(const MiniBatch& batch, std::size_t row, const ContentIndex& index,
                                        const PairIndex& pairs, Rng& rng);

}  // namespace jcce
