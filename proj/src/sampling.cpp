#include "jcce/sampling.hpp"

#include <map>
#include <numeric>
#include <stdexcept>

namespace jcce {
namespace {

std::string pair_key(const std::string& context_key, const std::string& item_key) {
    std::string k;
    k.reserve(context_key.size() + item_key.size() + 1);
    k += context_key;
    k.push_back('\x1f');
    k += item_key;
    return k;
}

MiniBatch from_rows(const ContentIndex& index, std::vector<std::size_t> rows) {
    MiniBatch batch;
    batch.rows = std::move(rows);
    batch.content_ids.reserve(batch.rows.size());
    for (auto r : batch.rows) batch.content_ids.push_back(index.content_of_event[r]);
    batch.groups = group_positives(batch.content_ids);
    return batch;
}

}  // namespace

ContentIndex index_log(std::span<const ViewingEvent> log) {
    ContentIndex index;
    std::vector<std::string> keys;
    keys.reserve(log.size());
    std::map<std::string, std::size_t> ids;
    index.context_key_of_event.reserve(log.size());
    for (const auto& e : log) {
        keys.push_back(canonical_key(e.item));
        ids.emplace(keys.back(), 0);
        index.context_key_of_event.push_back(canonical_key(e.context));
    }
    std::size_t next = 0;
    for (auto& [key, id] : ids) {
        id = next++;
        index.item_keys.push_back(key);
    }
    index.events_of_content.resize(ids.size());
    index.content_of_event.reserve(log.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const std::size_t id = ids.at(keys[i]);
        index.content_of_event.push_back(id);
        index.events_of_content[id].push_back(i);
    }
    return index;
}

PairIndex::PairIndex(const ContentIndex& index) {
    for (std::size_t i = 0; i < index.num_events(); ++i) {
        pairs_.insert(pair_key(index.context_key_of_event[i], index.item_keys[index.content_of_event[i]]));
    }
}

bool PairIndex::contains(const std::string& context_key, const std::string& item_key) const {
    return pairs_.count(pair_key(context_key, item_key)) > 0;
}

PositiveGroups group_positives(std::span<const std::size_t> content_ids) {
    std::map<std::size_t, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < content_ids.size(); ++i) members[content_ids[i]].push_back(i);
    PositiveGroups groups(content_ids.size());
    for (std::size_t i = 0; i < content_ids.size(); ++i) groups[i] = members[content_ids[i]];
    return groups;
}

MiniBatch sample_npairs(const ContentIndex& index, std::size_t n, Rng& rng) {
    const std::size_t m = index.num_contents();
    if (n > m) {
        throw std::invalid_argument("sample_npairs: batch of " + std::to_string(n) + " exceeds " +
                                    std::to_string(m) + " distinct contents");
    }
    std::vector<std::size_t> contents(m);
    std::iota(contents.begin(), contents.end(), std::size_t{0});
    // Partial Fisher-Yates: the first n slots become a uniform n-subset.
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + rng.below(m - i);
        std::swap(contents[i], contents[j]);
    }
    std::vector<std::size_t> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& events = index.events_of_content[contents[i]];
        rows.push_back(events[rng.below(events.size())]);
    }
    return from_rows(index, std::move(rows));
}

MiniBatch sample_relaxed(const ContentIndex& index, std::size_t n, Rng& rng) {
    if (index.num_events() == 0) throw std::invalid_argument("sample_relaxed: empty log");
    std::vector<std::size_t> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) rows.push_back(rng.below(index.num_events()));
    return from_rows(index, std::move(rows));
}

void vectorize_batch(MiniBatch& batch, std::span<const ViewingEvent> log, const FeatureSchema& schema) {
    batch.context_vectors = vectorize_contexts(log, batch.rows, schema);
    batch.item_vectors = vectorize_items(log, batch.rows, schema);
}

std::optional<std::size_t> bpr_negative(const MiniBatch& batch, std::size_t row, const ContentIndex& index,
                                        const PairIndex& pairs, Rng& rng) {
    if (row >= batch.size()) throw std::out_of_range("bpr_negative: row outside batch");
    const auto& context_key = index.context_key_of_event[batch.rows[row]];
    const std::size_t own = batch.content_ids[row];
    std::vector<std::size_t> admissible;
    for (std::size_t j = 0; j < batch.size(); ++j) {
        const std::size_t c = batch.content_ids[j];
        if (c == own) continue;
        if (pairs.contains(context_key, index.item_keys[c])) continue;
        admissible.push_back(j);
    }
    if (admissible.empty()) return std::nullopt;
    return admissible[rng.below(admissible.size())];
}

}  // namespace jcce
