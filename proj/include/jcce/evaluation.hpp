#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jcce/model.hpp"

namespace jcce {

struct EvalReport {
    std::map<std::size_t, double> hr;  // K -> HR@K
    double mrr = 0.0;
    double auc = 0.0;
    double mean_position = 0.0;
    std::size_t count = 0;      // L_test
    std::size_t num_items = 0;  // M
    std::vector<std::size_t> position_histogram;  // [pi - 1] -> number of events
};

/// 1-based rank of `observed_item` in the list.
std::size_t position(const RecommendationList& ranking, std::size_t observed_item);
std::size_t position(std::span<const std::size_t> ranking, std::size_t observed_item);

/// HR@K = mean(pi <= K), MRR = mean(1/pi), AUC = mean(M - pi) / (M - 1).
EvalReport metrics(std::span<const std::size_t> positions, std::size_t num_items, std::span<const std::size_t> ks);

/// Produces a full ranking of catalog indices for one viewing event.
class Ranker {
public:
    virtual ~Ranker() = default;
    virtual std::vector<std::size_t> rank(const ViewingEvent& event) = 0;
};

class ModelRanker final : public Ranker {
public:
    ModelRanker(const JcceModel& model, const Catalog& catalog) : model_(model), catalog_(catalog) {}
    std::vector<std::size_t> rank(const ViewingEvent& event) override;

private:
    const JcceModel& model_;
    const Catalog& catalog_;
};

/// Fresh uniform permutation per event.
class RandomRanker final : public Ranker {
public:
    RandomRanker(std::size_t num_items, Rng rng) : num_items_(num_items), rng_(std::move(rng)) {}
    std::vector<std::size_t> rank(const ViewingEvent& event) override;

private:
    std::size_t num_items_;
    Rng rng_;
};

/// Same ranking for every event.
class FixedRanker final : public Ranker {
public:
    explicit FixedRanker(std::vector<std::size_t> ranking) : ranking_(std::move(ranking)) {}
    std::vector<std::size_t> rank(const ViewingEvent&) override { return ranking_; }
    const std::vector<std::size_t>& ranking() const { return ranking_; }

private:
    std::vector<std::size_t> ranking_;
};

/// Maps an event to its temporal slot; nullopt when the event has no slot.
using SlotExtractor = std::function<std::optional<std::string>(const ViewingEvent&)>;

/// (weekday, hour) slot read from the "weekday" and "hour" context attributes.
SlotExtractor weekday_hour_slot();
/// Slot read from a single categorical context attribute.
SlotExtractor attribute_slot(std::string attribute);

/// Per-slot popularity; slots unseen in training fall back to the global ranking.
class SlotPopularityRanker final : public Ranker {
public:
    SlotPopularityRanker(std::map<std::string, std::vector<std::size_t>> per_slot,
                         std::vector<std::size_t> global, SlotExtractor slot)
        : per_slot_(std::move(per_slot)), global_(std::move(global)), slot_(std::move(slot)) {}
    std::vector<std::size_t> rank(const ViewingEvent& event) override;

private:
    std::map<std::string, std::vector<std::size_t>> per_slot_;
    std::vector<std::size_t> global_;
    SlotExtractor slot_;
};

/// Catalog indices by descending count, ties by ascending index.
std::vector<std::size_t> rank_by_counts(std::span<const std::size_t> counts);

/// Training events whose item is absent from the catalog are ignored.
FixedRanker toppop(std::span<const ViewingEvent> training_log, const Catalog& catalog);
SlotPopularityRanker toppop_temporal(std::span<const ViewingEvent> training_log, const Catalog& catalog,
                                     SlotExtractor slot = weekday_hour_slot());

/// Events whose item the catalog does not contain are dropped.
Log restrict_to_catalog(std::span<const ViewingEvent> log, const Catalog& catalog);

/// One ranking per test event. Throws DataError if a test item is not in the catalog.
EvalReport evaluate(Ranker& ranker, std::span<const ViewingEvent> test_log, const Catalog& catalog,
                    std::span<const std::size_t> ks);

}  // namespace jcce
