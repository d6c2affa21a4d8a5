#include "jcce/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "jcce/errors.hpp"

namespace jcce {

std::size_t position(std::span<const std::size_t> ranking, std::size_t observed_item) {
    const auto it = std::find(ranking.begin(), ranking.end(), observed_item);
    if (it == ranking.end()) throw std::invalid_argument("position: observed item not in ranking");
    return static_cast<std::size_t>(it - ranking.begin()) + 1;
}

std::size_t position(const RecommendationList& ranking, std::size_t observed_item) {
    return position(std::span<const std::size_t>(ranking.ranked_item_indices), observed_item);
}

EvalReport metrics(std::span<const std::size_t> positions, std::size_t num_items, std::span<const std::size_t> ks) {
    if (positions.empty()) throw std::invalid_argument("metrics: no positions");
    if (num_items < 2) throw std::invalid_argument("metrics: need at least two items");
    EvalReport report;
    report.count = positions.size();
    report.num_items = num_items;
    report.position_histogram.assign(num_items, 0);
    std::size_t position_sum = 0;
    double reciprocal_sum = 0.0;
    for (std::size_t pi : positions) {
        if (pi < 1 || pi > num_items) throw std::invalid_argument("metrics: position outside [1, M]");
        ++report.position_histogram[pi - 1];
        position_sum += pi;
        reciprocal_sum += 1.0 / static_cast<double>(pi);
    }
    const auto L = static_cast<double>(positions.size());
    const auto M = static_cast<double>(num_items);
    for (std::size_t k : ks) {
        if (k < 1) throw std::invalid_argument("metrics: K must be at least 1");
        std::size_t hits = 0;
        for (std::size_t p = 0; p < std::min(k, num_items); ++p) hits += report.position_histogram[p];
        report.hr[k] = static_cast<double>(hits) / L;
    }
    report.mrr = reciprocal_sum / L;
    const std::size_t gap_sum = num_items * positions.size() - position_sum;  // sum of (M - pi), exact
    report.auc = static_cast<double>(gap_sum) / (L * (M - 1.0));
    report.mean_position = static_cast<double>(position_sum) / L;
    return report;
}

std::vector<std::size_t> ModelRanker::rank(const ViewingEvent& event) {
    return recommend(model_, event.context, catalog_).ranked_item_indices;
}

std::vector<std::size_t> RandomRanker::rank(const ViewingEvent&) {
    std::vector<std::size_t> r(num_items_);
    std::iota(r.begin(), r.end(), std::size_t{0});
    rng_.shuffle(r.begin(), r.end());
    return r;
}

SlotExtractor weekday_hour_slot() {
    return [](const ViewingEvent& e) -> std::optional<std::string> {
        const auto wd = e.context.find("weekday");
        const auto hr = e.context.find("hour");
        if (wd == e.context.end() || hr == e.context.end()) return std::nullopt;
        const auto* w = std::get_if<std::string>(&wd->second);
        const auto* h = std::get_if<std::string>(&hr->second);
        if (!w || !h) return std::nullopt;
        return *w + "|" + *h;
    };
}

SlotExtractor attribute_slot(std::string attribute) {
    return [attribute = std::move(attribute)](const ViewingEvent& e) -> std::optional<std::string> {
        const auto it = e.context.find(attribute);
        if (it == e.context.end()) return std::nullopt;
        if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
        return std::nullopt;
    };
}

std::vector<std::size_t> SlotPopularityRanker::rank(const ViewingEvent& event) {
    if (const auto key = slot_(event)) {
        const auto it = per_slot_.find(*key);
        if (it != per_slot_.end()) return it->second;
    }
    return global_;
}

std::vector<std::size_t> rank_by_counts(std::span<const std::size_t> counts) {
    std::vector<std::size_t> order(counts.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
    return order;
}

FixedRanker toppop(std::span<const ViewingEvent> training_log, const Catalog& catalog) {
    std::vector<std::size_t> counts(catalog.size(), 0);
    for (const auto& e : training_log) {
        if (const auto j = catalog.index_of(e.item)) ++counts[*j];
    }
    return FixedRanker(rank_by_counts(counts));
}

SlotPopularityRanker toppop_temporal(std::span<const ViewingEvent> training_log, const Catalog& catalog,
                                     SlotExtractor slot) {
    std::vector<std::size_t> global(catalog.size(), 0);
    std::map<std::string, std::vector<std::size_t>> per_slot_counts;
    for (const auto& e : training_log) {
        const auto j = catalog.index_of(e.item);
        if (!j) continue;
        ++global[*j];
        if (const auto key = slot(e)) {
            auto& c = per_slot_counts[*key];
            if (c.empty()) c.assign(catalog.size(), 0);
            ++c[*j];
        }
    }
    std::map<std::string, std::vector<std::size_t>> per_slot;
    for (const auto& [key, c] : per_slot_counts) per_slot.emplace(key, rank_by_counts(c));
    return SlotPopularityRanker(std::move(per_slot), rank_by_counts(global), std::move(slot));
}

Log restrict_to_catalog(std::span<const ViewingEvent> log, const Catalog& catalog) {
    Log out;
    for (const auto& e : log) {
        if (catalog.index_of(e.item)) out.push_back(e);
    }
    return out;
}

EvalReport evaluate(Ranker& ranker, std::span<const ViewingEvent> test_log, const Catalog& catalog,
                    std::span<const std::size_t> ks) {
    std::vector<std::size_t> positions;
    positions.reserve(test_log.size());
    for (const auto& e : test_log) {
        const auto observed = catalog.index_of(e.item);
        if (!observed) throw DataError("evaluate: test item missing from catalog: " + canonical_key(e.item));
        const auto ranking = ranker.rank(e);
        if (ranking.size() != catalog.size()) throw ShapeError("evaluate: ranking length differs from catalog size");
        positions.push_back(position(std::span<const std::size_t>(ranking), *observed));
    }
    return metrics(positions, catalog.size(), ks);
}

}  // namespace jcce
