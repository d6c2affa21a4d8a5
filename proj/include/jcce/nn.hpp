#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "jcce/rng.hpp"

namespace jcce {

/// Row-major dense matrix. Batches are stored one sample per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Activation { relu, identity };

struct LayerParams {
    Matrix weights;  // out x in
    Vector biases;   // out
    Activation activation = Activation::identity;

    std::size_t in_dim() const { return static_cast<std::size_t>(weights.cols()); }
    std::size_t out_dim() const { return static_cast<std::size_t>(weights.rows()); }
};

/// Feed-forward stack; every layer but the last is a hidden layer.
using Encoder = std::vector<LayerParams>;

/// Uniform Xavier initialisation: fan_out x fan_in entries in [-b, b],
/// b = sqrt(6 / (fan_in + fan_out)), filled in row-major order.
Matrix xavier_init(std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// Xavier weights and zero biases.
LayerParams make_layer(std::size_t fan_in, std::size_t fan_out, Activation activation, Rng& rng);

/// ReLU hidden layers of the given widths followed by a linear layer with
/// `output_dim` units. Empty `hidden_widths` gives a single affine map.
Encoder make_encoder(std::size_t input_dim, const std::vector<std::size_t>& hidden_widths,
                     std::size_t output_dim, Rng& rng);

void validate_encoder(const Encoder& encoder);
std::size_t encoder_input_dim(const Encoder& encoder);
std::size_t encoder_output_dim(const Encoder& encoder);

Vector dense_forward(const LayerParams& layer, const Vector& x);
Matrix dense_forward(const LayerParams& layer, const Matrix& x);

struct DropoutResult {
    Matrix output;
    /// Per-unit multiplier: 0 for dropped units, 1/(1-rate) for kept ones.
    /// All ones when not training or rate == 0.
    Matrix mask;
};

/// Inverted dropout.
DropoutResult dropout(const Matrix& x, double rate, Rng& rng, bool training);

struct LayerTape {
    Matrix input;
    Matrix pre_activation;
    Matrix mask;  // empty when no dropout was applied after this layer
};

struct Tape {
    std::vector<LayerTape> layers;
};

struct ForwardResult {
    Matrix output;
    Tape tape;
};

/// Batched forward pass. Dropout (when training and rate > 0) follows the
/// activation of every hidden layer; the output layer is never dropped.
ForwardResult encoder_forward(const Encoder& encoder, const Matrix& x, double dropout_rate,
                              Rng& rng, bool training);

/// Inference-only forward pass; no tape, no dropout.
Matrix encoder_predict(const Encoder& encoder, const Matrix& x);
Vector encoder_predict(const Encoder& encoder, const Vector& x);

struct LayerGrads {
    Matrix weights;
    Vector biases;
};

struct EncoderGrads {
    std::vector<LayerGrads> layers;
    Matrix input;  // empty unless requested
};

/// Reverse-mode pass over a tape produced by encoder_forward on `encoder`.
EncoderGrads encoder_backward(const Encoder& encoder, const Tape& tape, const Matrix& grad_output,
                              bool need_input_grad = true);

EncoderGrads zero_grads(const Encoder& encoder);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<LayerGrads> first_moment;
    std::vector<LayerGrads> second_moment;
    long step_count = 0;
};

AdamState make_adam_state(const Encoder& encoder);

/// Bias-corrected Adam update in place.
void adam_step(Encoder& params, const EncoderGrads& grads, AdamState& state, const AdamConfig& config);

}  // namespace jcce
