#include "jcce/nn.hpp"

#include <cmath>
#include <string>

#include "jcce/errors.hpp"

namespace jcce {
namespace {

std::string dims(Eigen::Index r, Eigen::Index c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

void apply_activation(Matrix& z, Activation act) {
    if (act == Activation::relu) z = z.cwiseMax(0.0);
}

}  // namespace

Matrix xavier_init(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    if (fan_in == 0 || fan_out == 0) {
        throw std::invalid_argument("xavier_init: fan dimensions must be positive");
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
        for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
    }
    return w;
}

LayerParams make_layer(std::size_t fan_in, std::size_t fan_out, Activation activation, Rng& rng) {
    LayerParams layer;
    layer.weights = xavier_init(fan_in, fan_out, rng);
    layer.biases = Vector::Zero(static_cast<Eigen::Index>(fan_out));
    layer.activation = activation;
    return layer;
}

Encoder make_encoder(std::size_t input_dim, const std::vector<std::size_t>& hidden_widths,
                     std::size_t output_dim, Rng& rng) {
    Encoder enc;
    std::size_t fan_in = input_dim;
    for (std::size_t width : hidden_widths) {
        enc.push_back(make_layer(fan_in, width, Activation::relu, rng));
        fan_in = width;
    }
    enc.push_back(make_layer(fan_in, output_dim, Activation::identity, rng));
    return enc;
}

void validate_encoder(const Encoder& encoder) {
    if (encoder.empty()) throw ShapeError("encoder has no layers");
    for (std::size_t i = 0; i < encoder.size(); ++i) {
        const auto& l = encoder[i];
        if (l.biases.size() != l.weights.rows()) {
            throw ShapeError("layer " + std::to_string(i) + ": bias length does not match weight rows");
        }
        if (i > 0 && encoder[i - 1].out_dim() != l.in_dim()) {
            throw ShapeError("layer " + std::to_string(i) + ": input width does not chain");
        }
    }
}

std::size_t encoder_input_dim(const Encoder& encoder) {
    validate_encoder(encoder);
    return encoder.front().in_dim();
}

std::size_t encoder_output_dim(const Encoder& encoder) {
    validate_encoder(encoder);
    return encoder.back().out_dim();
}

Vector dense_forward(const LayerParams& layer, const Vector& x) {
    if (x.size() != layer.weights.cols()) {
        throw ShapeError("dense_forward: input length " + std::to_string(x.size()) +
                         " vs weights " + dims(layer.weights.rows(), layer.weights.cols()));
    }
    Vector y = layer.weights * x + layer.biases;
    if (layer.activation == Activation::relu) y = y.cwiseMax(0.0);
    return y;
}

Matrix dense_forward(const LayerParams& layer, const Matrix& x) {
    if (x.cols() != layer.weights.cols()) {
        throw ShapeError("dense_forward: input " + dims(x.rows(), x.cols()) + " vs weights " +
                         dims(layer.weights.rows(), layer.weights.cols()));
    }
    Matrix z = x * layer.weights.transpose();
    z.rowwise() += layer.biases.transpose();
    apply_activation(z, layer.activation);
    return z;
}

DropoutResult dropout(const Matrix& x, double rate, Rng& rng, bool training) {
    if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout: rate must be in [0, 1)");
    DropoutResult out;
    out.mask = Matrix::Ones(x.rows(), x.cols());
    if (!training || rate == 0.0) {
        out.output = x;
        return out;
    }
    const double keep_scale = 1.0 / (1.0 - rate);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            out.mask(r, c) = rng.uniform() < rate ? 0.0 : keep_scale;
        }
    }
    out.output = x.cwiseProduct(out.mask);
    return out;
}

ForwardResult encoder_forward(const Encoder& encoder, const Matrix& x, double dropout_rate,
                              Rng& rng, bool training) {
    validate_encoder(encoder);
    if (x.cols() != encoder.front().weights.cols()) {
        throw ShapeError("encoder_forward: input width " + std::to_string(x.cols()) +
                         " but encoder expects " + std::to_string(encoder.front().weights.cols()));
    }
    const bool drop = training && dropout_rate > 0.0;
    ForwardResult result;
    result.tape.layers.resize(encoder.size());
    Matrix h = x;
    for (std::size_t i = 0; i < encoder.size(); ++i) {
        const auto& layer = encoder[i];
        auto& rec = result.tape.layers[i];
        rec.input = h;
        rec.pre_activation = h * layer.weights.transpose();
        rec.pre_activation.rowwise() += layer.biases.transpose();
        h = rec.pre_activation;
        apply_activation(h, layer.activation);
        if (drop && i + 1 < encoder.size()) {
            auto d = dropout(h, dropout_rate, rng, true);
            h = std::move(d.output);
            rec.mask = std::move(d.mask);
        }
    }
    result.output = std::move(h);
    return result;
}

Matrix encoder_predict(const Encoder& encoder, const Matrix& x) {
    validate_encoder(encoder);
    Matrix h = x;
    for (const auto& layer : encoder) h = dense_forward(layer, h);
    return h;
}

Vector encoder_predict(const Encoder& encoder, const Vector& x) {
    validate_encoder(encoder);
    Vector h = x;
    for (const auto& layer : encoder) h = dense_forward(layer, h);
    return h;
}

EncoderGrads encoder_backward(const Encoder& encoder, const Tape& tape, const Matrix& grad_output,
                              bool need_input_grad) {
    if (tape.layers.size() != encoder.size() || tape.layers.empty()) {
        throw std::invalid_argument("encoder_backward: tape does not belong to this encoder");
    }
    const auto& last = tape.layers.back().pre_activation;
    if (grad_output.rows() != last.rows() || grad_output.cols() != last.cols()) {
        throw ShapeError("encoder_backward: upstream gradient " + dims(grad_output.rows(), grad_output.cols()) +
                         " vs output " + dims(last.rows(), last.cols()));
    }
    EncoderGrads grads;
    grads.layers.resize(encoder.size());
    Matrix g = grad_output;
    for (std::size_t i = encoder.size(); i-- > 0;) {
        const auto& layer = encoder[i];
        const auto& rec = tape.layers[i];
        if (rec.input.cols() != layer.weights.cols() || rec.pre_activation.cols() != layer.weights.rows()) {
            throw std::invalid_argument("encoder_backward: stale tape for layer " + std::to_string(i));
        }
        if (rec.mask.size() > 0) g = g.cwiseProduct(rec.mask);
        if (layer.activation == Activation::relu) {
            g = (rec.pre_activation.array() > 0.0).select(g, 0.0);
        }
        grads.layers[i].weights = g.transpose() * rec.input;
        grads.layers[i].biases = g.colwise().sum().transpose();
        if (i > 0 || need_input_grad) g = g * layer.weights;
    }
    if (need_input_grad) grads.input = std::move(g);
    return grads;
}

EncoderGrads zero_grads(const Encoder& encoder) {
    EncoderGrads grads;
    for (const auto& l : encoder) {
        grads.layers.push_back({Matrix::Zero(l.weights.rows(), l.weights.cols()),
                                Vector::Zero(l.biases.size())});
    }
    return grads;
}

AdamState make_adam_state(const Encoder& encoder) {
    AdamState state;
    state.first_moment = zero_grads(encoder).layers;
    state.second_moment = zero_grads(encoder).layers;
    return state;
}

void adam_step(Encoder& params, const EncoderGrads& grads, AdamState& state, const AdamConfig& config) {
    if (!(config.beta1 >= 0.0 && config.beta1 < 1.0 && config.beta2 >= 0.0 && config.beta2 < 1.0 &&
          config.eps > 0.0)) {
        throw std::invalid_argument("adam_step: invalid hyperparameters");
    }
    if (grads.layers.size() != params.size() || state.first_moment.size() != params.size() ||
        state.second_moment.size() != params.size()) {
        throw ShapeError("adam_step: parameter, gradient and state layer counts differ");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = params[i];
        const auto& g = grads.layers[i];
        const auto& m = state.first_moment[i];
        if (g.weights.rows() != p.weights.rows() || g.weights.cols() != p.weights.cols() ||
            g.biases.size() != p.biases.size() || m.weights.rows() != p.weights.rows() ||
            m.weights.cols() != p.weights.cols() || m.biases.size() != p.biases.size()) {
            throw ShapeError("adam_step: shape mismatch in layer " + std::to_string(i));
        }
    }

    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    const auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
        m = config.beta1 * m + (1.0 - config.beta1) * grad;
        v = config.beta2 * v + (1.0 - config.beta2) * grad.cwiseProduct(grad);
        param.array() -= config.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + config.eps);
    };
    for (std::size_t i = 0; i < params.size(); ++i) {
        update(params[i].weights, grads.layers[i].weights, state.first_moment[i].weights,
               state.second_moment[i].weights);
        update(params[i].biases, grads.layers[i].biases, state.first_moment[i].biases,
               state.second_moment[i].biases);
    }
}

}  // namespace jcce
