#include "jcce/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>

#include "jcce/errors.hpp"
#include "jcce/rng.hpp"

namespace jcce {
namespace {

constexpr std::int64_t kEpochStart = 1528070400;  // Monday 2018-06-04 00:00 UTC
constexpr std::size_t kRegions = 12;
constexpr std::size_t kDayparts = 6;
constexpr std::array<const char*, 7> kWeekdays{"mon", "tue", "wed", "thu", "fri", "sat", "sun"};
constexpr std::array<const char*, 4> kLocations{"living_room", "bedroom", "kitchen", "other"};
// Relative audience by hour of day, evening peak.
constexpr std::array<double, 24> kHourWeight{1, 0.6, 0.3, 0.2, 0.2, 0.3, 1, 2, 2.5, 2, 1.8, 1.8,
                                             2.2, 2, 1.8, 2, 2.5, 3.5, 5, 6.5, 7, 6, 4, 2};

std::string padded(const char* prefix, std::size_t value, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, value);
    return buf;
}

int digits(std::size_t n) {
    int d = 1;
    while (n >= 10) {
        n /= 10;
        ++d;
    }
    return d;
}

struct User {
    std::string id;
    std::size_t household;
    double age;
    bool female;
    std::vector<double> affinity;
};

struct Household {
    std::vector<std::size_t> members;
    std::string region;
};

}  // namespace

void validate_generator_config(const GeneratorConfig& c) {
    if (c.n_genres < 2) throw ConfigError("n_genres must be at least 2");
    if (c.n_users == 0 || c.n_households == 0) throw ConfigError("need at least one user and one household");
    if (c.n_households > c.n_users) throw ConfigError("n_households cannot exceed n_users");
    const auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(c.coviewing_prob) || !prob(c.timeshift_prob)) throw ConfigError("probabilities must lie in [0, 1]");
    if (!(c.habit_strength >= 0.0) || !(c.temporal_strength >= 0.0) || !(c.popularity_skew >= 0.0)) {
        throw ConfigError("habit_strength, temporal_strength and popularity_skew must be non-negative");
    }
}

Log generate(const GeneratorConfig& config) {
    validate_generator_config(config);
    const Rng master(config.seed);
    Rng world = master.fork(1);
    Rng events = master.fork(2);
    const std::size_t m = config.n_genres;

    std::vector<std::string> genres;
    for (std::size_t g = 0; g < m; ++g) genres.push_back(padded("g", g, std::max(2, digits(m - 1))));

    std::vector<Household> households(config.n_households);
    for (auto& h : households) h.region = padded("r", world.below(kRegions), 2);
    std::vector<User> users(config.n_users);
    for (std::size_t u = 0; u < users.size(); ++u) {
        auto& user = users[u];
        user.id = padded("u", u, std::max(4, digits(config.n_users - 1)));
        user.household = u % config.n_households;
        user.age = static_cast<double>(6 + world.below(75));
        user.female = world.bernoulli(0.5);
        user.affinity.resize(m);
        for (auto& a : user.affinity) a = world.normal();
        households[user.household].members.push_back(u);
    }

    std::vector<std::vector<double>> daypart_prior(kDayparts, std::vector<double>(m));
    for (auto& prior : daypart_prior) {
        for (auto& p : prior) p = world.normal();
    }
    std::vector<std::size_t> rank(m);
    for (std::size_t g = 0; g < m; ++g) rank[g] = g;
    world.shuffle(rank.begin(), rank.end());
    std::vector<double> popularity(m);
    for (std::size_t g = 0; g < m; ++g) {
        popularity[g] = -config.popularity_skew * std::log(static_cast<double>(rank[g] + 1));
    }

    Log log;
    log.reserve(config.n_weeks * 7 * config.events_per_day);
    std::vector<double> logits(m), weights(m);
    const std::size_t days = config.n_weeks * 7;
    for (std::size_t day = 0; day < days; ++day) {
        Log today;
        for (std::size_t k = 0; k < config.events_per_day; ++k) {
            const std::size_t hour = events.categorical(kHourWeight);
            const std::int64_t ts = kEpochStart + static_cast<std::int64_t>(day) * 86400 +
                                    static_cast<std::int64_t>(hour) * 3600 +
                                    static_cast<std::int64_t>(events.below(3600));

            const auto& house = households[events.below(households.size())];
            std::vector<std::size_t> group{house.members[events.below(house.members.size())]};
            if (house.members.size() > 1 && events.bernoulli(config.coviewing_prob)) {
                const std::size_t extra = 1 + events.below(std::min<std::size_t>(2, house.members.size() - 1));
                std::vector<std::size_t> others;
                for (auto u : house.members) {
                    if (u != group.front()) others.push_back(u);
                }
                events.shuffle(others.begin(), others.end());
                group.insert(group.end(), others.begin(), others.begin() + static_cast<std::ptrdiff_t>(extra));
            }
            std::size_t guests = 0;
            if (events.bernoulli(group.size() > 1 ? 0.2 : 0.05)) guests = 1 + events.below(2);

            std::string activity = "live";
            double slot_weight = 1.0;
            if (events.bernoulli(config.timeshift_prob)) {
                if (events.bernoulli(0.5)) {
                    activity = "vosdal";
                    slot_weight = 0.5;
                } else {
                    activity = "timeshifted";
                    slot_weight = 0.0;
                }
            }
            const std::string location =
                events.bernoulli(0.7) ? kLocations[0] : kLocations[1 + events.below(kLocations.size() - 1)];

            const auto& prior = daypart_prior[hour * kDayparts / 24];
            for (std::size_t g = 0; g < m; ++g) {
                double aff = 0.0;
                for (auto u : group) aff += users[u].affinity[g];
                aff /= static_cast<double>(group.size());
                logits[g] = config.habit_strength * aff + config.temporal_strength * slot_weight * prior[g] +
                            popularity[g];
            }
            const double top = *std::max_element(logits.begin(), logits.end());
            for (std::size_t g = 0; g < m; ++g) weights[g] = std::exp(logits[g] - top);
            const std::size_t genre = events.categorical(weights);

            std::vector<std::string> viewer_ids;
            double age = 0.0;
            double female = 0.0;
            for (auto u : group) {
                viewer_ids.push_back(users[u].id);
                age += users[u].age;
                female += users[u].female ? 1.0 : 0.0;
            }
            std::sort(viewer_ids.begin(), viewer_ids.end());

            ViewingEvent e;
            e.timestamp = ts;
            e.duration_min = events.exponential(30.0);
            e.item["genre"] = genres[genre];
            e.context["viewers"] = std::move(viewer_ids);
            e.context["n_viewers"] = std::to_string(group.size());
            e.context["n_guests"] = std::to_string(guests);
            e.context["mean_age"] = age / static_cast<double>(group.size());
            e.context["female_share"] = female / static_cast<double>(group.size());
            e.context["weekday"] = std::string(kWeekdays[day % 7]);
            e.context["hour"] = padded("", hour, 2);
            e.context["tv_location"] = location;
            e.context["region"] = house.region;
            e.context["activity"] = activity;
            today.push_back(std::move(e));
        }
        std::stable_sort(today.begin(), today.end(),
                         [](const ViewingEvent& a, const ViewingEvent& b) { return a.timestamp < b.timestamp; });
        for (auto& e : today) log.push_back(std::move(e));
    }
    return log;
}

Log filter_log(std::span<const ViewingEvent> log, double min_duration_min, std::size_t min_item_count) {
    Log kept;
    for (const auto& e : log) {
        if (e.duration_min >= min_duration_min) kept.push_back(e);
    }
    std::map<std::string, std::size_t> counts;
    std::vector<std::string> keys;
    keys.reserve(kept.size());
    for (const auto& e : kept) {
        keys.push_back(canonical_key(e.item));
        ++counts[keys.back()];
    }
    Log out;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (counts[keys[i]] >= min_item_count) out.push_back(std::move(kept[i]));
    }
    return out;
}

std::size_t default_min_item_count(std::size_t n_events) { return (n_events + 99) / 100; }

std::pair<Log, Log> temporal_split(std::span<const ViewingEvent> log, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("temporal_split: train_fraction must lie in (0, 1)");
    }
    Log ordered(log.begin(), log.end());
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const ViewingEvent& a, const ViewingEvent& b) { return a.timestamp < b.timestamp; });
    const auto n_train =
        static_cast<std::size_t>(std::llround(static_cast<double>(ordered.size()) * train_fraction));
    Log train(std::make_move_iterator(ordered.begin()),
              std::make_move_iterator(ordered.begin() + static_cast<std::ptrdiff_t>(n_train)));
    Log test(std::make_move_iterator(ordered.begin() + static_cast<std::ptrdiff_t>(n_train)),
             std::make_move_iterator(ordered.end()));
    return {std::move(train), std::move(test)};
}

}  // namespace jcce
