#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "jcce/model.hpp"
#include "jcce/sampling.hpp"

namespace jcce {

enum class Objective { jcce, rjcce, ljcce, bpr };

const char* to_string(Objective objective);
Objective objective_from_string(const std::string& name);

/// Strict N-pairs sampling for jcce/ljcce; relaxed for rjcce and bpr.
bool uses_strict_sampling(Objective objective);

struct TrainConfig {
    Objective objective = Objective::rjcce;
    std::size_t batch_size = 0;  // 0: 256, capped by distinct contents for strict sampling
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double lambda = 1e-5;  // summed over rows, so its weight grows with N
    double dropout_rate = 0.2;  // hidden layers only
    long max_steps = 20000;
    long eval_every = 200;
    long patience = 5;
    double validation_fraction = 0.1;
    std::uint64_t seed = 1;
    EncoderConfig encoder;  // architecture is forced to linear for ljcce
};

/// Throws ConfigError on out-of-range values.
void validate_train_config(const TrainConfig& config);

/// Encoder configuration actually trained for `config`.
EncoderConfig effective_encoder(const TrainConfig& config);

struct EvalRecord {
    long step = 0;
    double train_loss = 0.0;  // mean fit-batch objective since the previous record
    double val_loss = 0.0;
};

struct TrainHistory {
    std::vector<EvalRecord> records;
    long stopping_step = 0;
    std::string stopping_reason;  // "early_stopping" or "max_steps"
    long best_step = 0;
};

struct TrainResult {
    JcceModel model;  // parameters from the best validation evaluation
    TrainHistory history;
};

/// Number of leading events used for fitting; the rest validate.
std::size_t fit_count(std::size_t n_events, double validation_fraction);

/// Temporally ordered log in; schema built from the fit portion only.
TrainResult train(std::span<const ViewingEvent> log, const FeatureSchema& schema, const TrainConfig& config);

/// Parameters plus optimizer state for one training run.
struct TrainingState {
    JcceModel model;
    AdamState context_adam;
    AdamState item_adam;
};

TrainingState make_training_state(const FeatureSchema& schema, const TrainConfig& config, Rng& init_rng);

/// Objective value of a vectorised batch. `negatives` is used by bpr only.
/// When `dropout_rng` is non-null dropout is active.
double batch_objective(const JcceModel& model, const MiniBatch& batch, std::span<const std::size_t> negatives,
                       const TrainConfig& config, Rng* dropout_rng = nullptr);

/// One forward/backward/Adam update; returns the pre-update objective value.
double train_step(TrainingState& state, const MiniBatch& batch, std::span<const std::size_t> negatives,
                  const TrainConfig& config, Rng& dropout_rng);

/// Rewrites every multi-viewer event to one uniformly chosen viewer. Throws
/// DataError if no event carries `viewer_feature` as a category set.
Log ablate_to_single_viewer(std::span<const ViewingEvent> log, Rng& rng,
                            const std::string& viewer_feature = "viewers");

}  // namespace jcce
