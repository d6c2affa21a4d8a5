#pragma once

#include <cstdint>
#include <span>
#include <utility>

#include "jcce/features.hpp"

namespace jcce {

/// Knobs of the synthetic viewing-log generator. Genre choice for an event is
/// a softmax over
///   habit_strength * mean affinity of the viewers
/// + temporal_strength * prior of the hour slot (0 for timeshifted, halved for VOSDAL)
/// - popularity_skew * log(popularity rank)
struct GeneratorConfig {
    std::size_t n_households = 60;
    std::size_t n_users = 150;
    std::size_t n_genres = 20;
    std::size_t n_weeks = 4;
    std::size_t events_per_day = 200;
    double coviewing_prob = 0.3;
    double habit_strength = 5.0;
    double temporal_strength = 2.0;
    double popularity_skew = 0.0;
    double timeshift_prob = 0.2;
    std::uint64_t seed = 7;
};

void validate_generator_config(const GeneratorConfig& config);

/// Temporally ordered synthetic log. Context attributes: viewers (set),
/// n_viewers, n_guests, mean_age (numeric), female_share (numeric), weekday,
/// hour, tv_location, region, activity. Item attribute: genre.
Log generate(const GeneratorConfig& config);

/// Drops events shorter than `min_duration_min` (inclusive threshold), then
/// events whose content occurs fewer than `min_item_count` times in what remains.
Log filter_log(std::span<const ViewingEvent> log, double min_duration_min, std::size_t min_item_count);

/// 1% of the log size, rounded up.
std::size_t default_min_item_count(std::size_t n_events);

/// First `train_fraction` of the events (ordered by timestamp, ties kept in
/// input order) for training, the rest for testing.
std::pair<Log, Log> temporal_split(std::span<const ViewingEvent> log, double train_fraction = 0.9);

}  // namespace jcce
