#include "jcce/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "jcce/errors.hpp"

namespace jcce {
namespace {

constexpr std::size_t kDefaultBatch = 256;
constexpr std::size_t kMaxValidationBatches = 64;
constexpr int kMaxResamples = 100;

std::size_t batch_size_for(const TrainConfig& config, std::size_t distinct_contents) {
    const std::size_t requested = config.batch_size == 0 ? kDefaultBatch : config.batch_size;
    if (!uses_strict_sampling(config.objective)) return requested;
    if (config.batch_size == 0) return std::min(requested, distinct_contents);
    if (requested > distinct_contents) {
        throw ConfigError("batch_size " + std::to_string(requested) + " exceeds the " +
                          std::to_string(distinct_contents) + " distinct contents available for N-pairs sampling");
    }
    return requested;
}

/// Negatives for every row, or nullopt if some row has none.
std::optional<std::vector<std::size_t>> draw_negatives(const MiniBatch& batch, const ContentIndex& index,
                                                       const PairIndex& pairs, Rng& rng) {
    std::vector<std::size_t> out(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto j = bpr_negative(batch, i, index, pairs, rng);
        if (!j) return std::nullopt;
        out[i] = *j;
    }
    return out;
}

struct ValidationSet {
    std::vector<MiniBatch> batches;
    std::vector<std::vector<std::size_t>> negatives;
};

ValidationSet build_validation(std::span<const ViewingEvent> val_log, const FeatureSchema& schema,
                               const TrainConfig& config, std::size_t n, const PairIndex& fit_pairs,
                               Rng& rng) {
    ValidationSet set;
    const ContentIndex index = index_log(val_log);
    if (uses_strict_sampling(config.objective)) {
        const std::size_t nv = std::min(n, index.num_contents());
        const std::size_t count =
            std::clamp<std::size_t>((val_log.size() + nv - 1) / std::max<std::size_t>(nv, 1), 1,
                                    kMaxValidationBatches);
        for (std::size_t b = 0; b < count; ++b) set.batches.push_back(sample_npairs(index, nv, rng));
    } else {
        for (std::size_t start = 0; start < val_log.size(); start += n) {
            const std::size_t end = std::min(start + n, val_log.size());
            if (end - start < 2) break;
            MiniBatch batch;
            for (std::size_t r = start; r < end; ++r) {
                batch.rows.push_back(r);
                batch.content_ids.push_back(index.content_of_event[r]);
            }
            batch.groups = group_positives(batch.content_ids);
            set.batches.push_back(std::move(batch));
        }
    }
    for (auto& batch : set.batches) vectorize_batch(batch, val_log, schema);

    if (config.objective == Objective::bpr) {
        std::vector<MiniBatch> kept;
        for (auto& batch : set.batches) {
            std::vector<std::size_t> negs(batch.size());
            bool ok = true;
            for (std::size_t i = 0; i < batch.size() && ok; ++i) {
                auto j = bpr_negative(batch, i, index, fit_pairs, rng);
                if (!j) {
                    // Fall back to any row with different content.
                    std::vector<std::size_t> other;
                    for (std::size_t k = 0; k < batch.size(); ++k) {
                        if (batch.content_ids[k] != batch.content_ids[i]) other.push_back(k);
                    }
                    if (other.empty()) {
                        ok = false;
                        break;
                    }
                    j = other[rng.below(other.size())];
                }
                negs[i] = *j;
            }
            if (ok) {
                set.negatives.push_back(std::move(negs));
                kept.push_back(std::move(batch));
            }
        }
        set.batches = std::move(kept);
    } else {
        set.negatives.resize(set.batches.size());
    }
    return set;
}

double validation_loss(const JcceModel& model, const ValidationSet& set, const TrainConfig& config) {
    if (set.batches.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t b = 0; b < set.batches.size(); ++b) {
        total += batch_objective(model, set.batches[b], set.negatives[b], config, nullptr);
    }
    return total / static_cast<double>(set.batches.size());
}

struct BatchLoss {
    TwoTowerLoss loss;
    ForwardResult context;
    ForwardResult item;
};

BatchLoss forward_loss(const JcceModel& model, const MiniBatch& batch, std::span<const std::size_t> negatives,
                       const TrainConfig& config, Rng* dropout_rng) {
    if (batch.context_vectors.rows() != static_cast<Eigen::Index>(batch.size()) ||
        batch.item_vectors.rows() != static_cast<Eigen::Index>(batch.size())) {
        throw ShapeError("batch has not been vectorised");
    }
    Rng unused(0);
    Rng& rng = dropout_rng ? *dropout_rng : unused;
    const bool training = dropout_rng != nullptr;
    BatchLoss out{{}, encoder_forward(model.context_encoder, batch.context_vectors, config.dropout_rate, rng, training),
                  encoder_forward(model.item_encoder, batch.item_vectors, config.dropout_rate, rng, training)};
    switch (config.objective) {
        case Objective::jcce:
        case Objective::ljcce:
            out.loss = jcce_objective(out.context.output, out.item.output, config.lambda);
            break;
        case Objective::rjcce:
            out.loss = rjcce_objective(out.context.output, out.item.output, batch.groups, config.lambda);
            break;
        case Objective::bpr:
            out.loss = bpr_loss(out.context.output, out.item.output, negatives, config.lambda);
            break;
    }
    return out;
}

}  // namespace

const char* to_string(Objective objective) {
    switch (objective) {
        case Objective::jcce: return "jcce";
        case Objective::rjcce: return "rjcce";
        case Objective::ljcce: return "ljcce";
        case Objective::bpr: return "bpr";
    }
    return "unknown";
}

Objective objective_from_string(const std::string& name) {
    if (name == "jcce") return Objective::jcce;
    if (name == "rjcce") return Objective::rjcce;
    if (name == "ljcce") return Objective::ljcce;
    if (name == "bpr") return Objective::bpr;
    throw ConfigError("unknown objective '" + name + "' (expected jcce, rjcce, ljcce or bpr)");
}

bool uses_strict_sampling(Objective objective) {
    return objective == Objective::jcce || objective == Objective::ljcce;
}

void validate_train_config(const TrainConfig& c) {
    if (c.batch_size == 1) throw ConfigError("batch_size must be at least 2");
    if (!(c.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(c.beta1 >= 0.0 && c.beta1 < 1.0 && c.beta2 >= 0.0 && c.beta2 < 1.0)) {
        throw ConfigError("Adam betas must lie in [0, 1)");
    }
    if (!(c.eps > 0.0)) throw ConfigError("eps must be positive");
    if (!(c.lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
    if (!(c.dropout_rate >= 0.0 && c.dropout_rate < 1.0)) throw ConfigError("dropout_rate must lie in [0, 1)");
    if (c.max_steps < 0) throw ConfigError("max_steps must be non-negative");
    if (c.eval_every < 1) throw ConfigError("eval_every must be at least 1");
    if (c.patience < 1) throw ConfigError("patience must be at least 1");
    if (!(c.validation_fraction > 0.0 && c.validation_fraction < 0.5)) {
        throw ConfigError("validation_fraction must lie in (0, 0.5)");
    }
    if (c.encoder.embedding_dim < 1) throw ConfigError("embedding_dim must be at least 1");
    for (auto w : c.encoder.hidden_widths) {
        if (w < 1) throw ConfigError("hidden widths must be positive");
    }
}

EncoderConfig effective_encoder(const TrainConfig& config) {
    EncoderConfig enc = config.encoder;
    if (config.objective == Objective::ljcce) {
        enc.architecture = Architecture::linear;
        enc.hidden_widths.clear();
    }
    return enc;
}

std::size_t fit_count(std::size_t n_events, double validation_fraction) {
    const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n_events) * validation_fraction));
    return n_events - std::min(n_val, n_events);
}

TrainingState make_training_state(const FeatureSchema& schema, const TrainConfig& config, Rng& init_rng) {
    TrainingState state;
    state.model = init_model(schema, effective_encoder(config), init_rng);
    state.context_adam = make_adam_state(state.model.context_encoder);
    state.item_adam = make_adam_state(state.model.item_encoder);
    return state;
}

double batch_objective(const JcceModel& model, const MiniBatch& batch, std::span<const std::size_t> negatives,
                       const TrainConfig& config, Rng* dropout_rng) {
    return forward_loss(model, batch, negatives, config, dropout_rng).loss.value;
}

double train_step(TrainingState& state, const MiniBatch& batch, std::span<const std::size_t> negatives,
                  const TrainConfig& config, Rng& dropout_rng) {
    auto fwd = forward_loss(state.model, batch, negatives, config, &dropout_rng);
    if (!std::isfinite(fwd.loss.value)) throw NumericError("training objective became non-finite");
    const auto gc = encoder_backward(state.model.context_encoder, fwd.context.tape, fwd.loss.grad_context, false);
    const auto gi = encoder_backward(state.model.item_encoder, fwd.item.tape, fwd.loss.grad_item, false);
    const AdamConfig adam{config.learning_rate, config.beta1, config.beta2, config.eps};
    adam_step(state.model.context_encoder, gc, state.context_adam, adam);
    adam_step(state.model.item_encoder, gi, state.item_adam, adam);
    return fwd.loss.value;
}

TrainResult train(std::span<const ViewingEvent> log, const FeatureSchema& schema, const TrainConfig& config) {
    validate_train_config(config);
    for (std::size_t i = 1; i < log.size(); ++i) {
        if (log[i].timestamp < log[i - 1].timestamp) throw DataError("train: log is not temporally ordered");
    }
    const std::size_t n_fit = fit_count(log.size(), config.validation_fraction);
    if (n_fit < 2 || log.size() - n_fit < 2) {
        throw DataError("train: log too small for a fit/validation split");
    }
    const auto fit_log = log.first(n_fit);
    const auto val_log = log.subspan(n_fit);

    const Rng master(config.seed);
    Rng init_rng = master.fork(1);
    Rng sample_rng = master.fork(2);
    Rng dropout_rng = master.fork(3);
    Rng val_rng = master.fork(4);
    Rng negative_rng = master.fork(5);

    TrainingState state = make_training_state(schema, config, init_rng);
    validate_model(state.model);

    const ContentIndex fit_index = index_log(fit_log);
    const std::size_t n = batch_size_for(config, fit_index.num_contents());
    if (n < 2) throw DataError("train: fewer than two distinct contents in the fit portion");
    const PairIndex fit_pairs = config.objective == Objective::bpr ? PairIndex(fit_index) : PairIndex();
    const ValidationSet validation = build_validation(val_log, schema, config, n, fit_pairs, val_rng);

    TrainResult result;
    result.model = state.model;
    result.history.stopping_reason = "max_steps";
    double best = std::numeric_limits<double>::infinity();
    long since_best = 0;
    double train_sum = 0.0;
    long train_count = 0;

    for (long step = 1; step <= config.max_steps; ++step) {
        MiniBatch batch;
        std::vector<std::size_t> negatives;
        for (int attempt = 0;; ++attempt) {
            if (attempt == kMaxResamples) throw DataError("train: could not find admissible BPR negatives");
            batch = uses_strict_sampling(config.objective) ? sample_npairs(fit_index, n, sample_rng)
                                                           : sample_relaxed(fit_index, n, sample_rng);
            if (config.objective != Objective::bpr) break;
            if (auto negs = draw_negatives(batch, fit_index, fit_pairs, negative_rng)) {
                negatives = std::move(*negs);
                break;
            }
        }
        vectorize_batch(batch, fit_log, schema);
        train_sum += train_step(state, batch, negatives, config, dropout_rng);
        ++train_count;

        if (step % config.eval_every == 0 || step == config.max_steps) {
            const double val = validation_loss(state.model, validation, config);
            if (!std::isfinite(val)) throw NumericError("validation loss became non-finite");
            result.history.records.push_back({step, train_sum / static_cast<double>(train_count), val});
            train_sum = 0.0;
            train_count = 0;
            result.history.stopping_step = step;
            if (val < best) {
                best = val;
                since_best = 0;
                result.model = state.model;
                result.history.best_step = step;
            } else if (++since_best >= config.patience) {
                result.history.stopping_reason = "early_stopping";
                break;
            }
        }
    }
    return result;
}

Log ablate_to_single_viewer(std::span<const ViewingEvent> log, Rng& rng, const std::string& viewer_feature) {
    bool found = false;
    Log out(log.begin(), log.end());
    for (auto& event : out) {
        auto it = event.context.find(viewer_feature);
        if (it == event.context.end()) continue;
        auto* viewers = std::get_if<std::vector<std::string>>(&it->second);
        if (!viewers) continue;
        found = true;
        if (viewers->size() > 1) {
            std::string keep = (*viewers)[rng.below(viewers->size())];
            *viewers = {std::move(keep)};
        }
    }
    if (!found) throw DataError("ablate_to_single_viewer: no multi-valued '" + viewer_feature + "' attribute");
    return out;
}

}  // namespace jcce
