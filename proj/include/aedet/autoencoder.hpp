#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "aedet/dataset.hpp"
#include "aedet/errors.hpp"
#include "aedet/rng.hpp"
#include "aedet/telemetry.hpp"
#include "aedet/types.hpp"

// Dense 3-layer autoencoder: F inputs, a sparse ReLU hidden layer of 10*F
// units with an L1 activity penalty, and F linear outputs. Trained with Adam
// on mean absolute error. Everything here is templated on the scalar type and
// uses Eigen dense types; the pipeline instantiates it with Real.

namespace aedet {

template <typename Scalar>
struct LayerParams {
    MatrixX<Scalar> weights;  // out x in
    VectorX<Scalar> biases;   // out
};

// Weight/bias tensors for both layers. Also reused as the gradient container
// since gradients are shaped exactly like the parameters.
template <typename Scalar>
struct ModelParams {
    LayerParams<Scalar> encoder;  // 10F x F
    LayerParams<Scalar> decoder;  // F x 10F
};

struct TrainConfig {
    int epochs = 100;
    int batch_size = 32;
    Real learning_rate = 1e-3;
    Real adam_beta1 = 0.9;
    Real adam_beta2 = 0.999;
    Real adam_epsilon = 1e-8;
    Real l1_lambda = 1e-5;
    std::uint64_t rng_seed = 0;
};

// First/second moment accumulators shaped like every parameter tensor, plus
// the shared step counter. Accumulators start at zero.
template <typename Scalar>
struct AdamState {
    ModelParams<Scalar> m;
    ModelParams<Scalar> v;
    std::int64_t t = 0;
};

template <typename Scalar>
struct AutoencoderModel {
    LayerParams<Scalar> encoder;
    LayerParams<Scalar> decoder;
    TrainConfig hyper;
    NormalizationParams norm;
    std::string node_id;
    Scalar train_mae = 0;  // mean reconstruction error over the training set

    Index feature_count() const { return encoder.weights.cols(); }
    Index hidden_count() const { return encoder.weights.rows(); }
};

template <typename Scalar>
struct Activation {
    VectorX<Scalar> hidden;          // 10F, after ReLU
    VectorX<Scalar> reconstruction;  // F, linear
};

template <typename Scalar>
struct BatchActivation {
    MatrixX<Scalar> preactivation;   // 10F x B
    MatrixX<Scalar> hidden;          // 10F x B
    MatrixX<Scalar> reconstruction;  // F x B
};

template <typename Scalar>
struct BackwardResult {
    ModelParams<Scalar> grads;
    Scalar mean_loss = 0;  // mean per-sample loss of the minibatch, L1 term included
};

namespace detail {

// Elementwise subgradient of |.|, 0 at 0 by convention.
template <typename Scalar>
inline Scalar sgn(Scalar x) {
    return x > Scalar(0) ? Scalar(1) : (x < Scalar(0) ? Scalar(-1) : Scalar(0));
}

}  // namespace detail

// Fresh model: weights uniform in +-sqrt(6 / (fan_in + fan_out)) drawn from
// the seeded generator in row-major order, biases zero. Hidden width is
// always 10x the input width.
template <typename Scalar = Real>
AutoencoderModel<Scalar> init_model(Index features, const TrainConfig& cfg) {
    if (features < 1) throw DataError("init_model: feature count must be >= 1");
    const Index hidden = 10 * features;
    AutoencoderModel<Scalar> model;
    model.hyper = cfg;

    Rng rng(derive_seed(cfg.rng_seed, "init"));
    const double limit = std::sqrt(6.0 / static_cast<double>(features + hidden));

    auto fill = [&](MatrixX<Scalar>& w, Index rows, Index cols) {
        w.resize(rows, cols);
        for (Index r = 0; r < rows; ++r)
            for (Index c = 0; c < cols; ++c)
                w(r, c) = static_cast<Scalar>(rng.uniform(-limit, limit));
    };
    fill(model.encoder.weights, hidden, features);
    model.encoder.biases = VectorX<Scalar>::Zero(hidden);
    fill(model.decoder.weights, features, hidden);
    model.decoder.biases = VectorX<Scalar>::Zero(features);
    return model;
}

// hidden = relu(We x + be); reconstruction = Wd hidden + bd (no output
// activation). Rejects non-finite inputs.
template <typename Scalar>
Activation<Scalar> forward(const AutoencoderModel<Scalar>& model, const VectorX<Scalar>& x) {
    if (x.size() != model.feature_count())
        throw DataError("forward: input width " + std::to_string(x.size()) +
                        " does not match model width " + std::to_string(model.feature_count()));
    if (!x.allFinite()) throw DataError("forward: non-finite input");
    Activation<Scalar> act;
    act.hidden = (model.encoder.weights * x + model.encoder.biases).cwiseMax(Scalar(0));
    act.reconstruction = model.decoder.weights * act.hidden + model.decoder.biases;
    return act;
}

// Batched forward pass, one sample per column.
template <typename Scalar>
BatchActivation<Scalar> forward_batch(const LayerParams<Scalar>& encoder,
                                      const LayerParams<Scalar>& decoder,
                                      const MatrixX<Scalar>& x) {
    if (x.rows() != encoder.weights.cols())
        throw DataError("forward_batch: input width does not match model width");
    BatchActivation<Scalar> act;
    act.preactivation.noalias() = encoder.weights * x;
    act.preactivation.colwise() += encoder.biases;
    act.hidden = act.preactivation.cwiseMax(Scalar(0));
    act.reconstruction.noalias() = decoder.weights * act.hidden;
    act.reconstruction.colwise() += decoder.biases;
    return act;
}

template <typename Scalar>
BatchActivation<Scalar> forward_batch(const AutoencoderModel<Scalar>& model,
                                      const MatrixX<Scalar>& x) {
    return forward_batch(model.encoder, model.decoder, x);
}

// loss = (1/F) * sum_i |x_i - xhat_i| + l1_lambda * sum_j |hidden_j|
template <typename Scalar>
Scalar loss(const VectorX<Scalar>& x, const VectorX<Scalar>& reconstruction,
            const VectorX<Scalar>& hidden, Real l1_lambda) {
    const Scalar mae = (x - reconstruction).cwiseAbs().sum() / static_cast<Scalar>(x.size());
    return mae + static_cast<Scalar>(l1_lambda) * hidden.cwiseAbs().sum();
}

// Gradients of the mean minibatch loss w.r.t. every weight and bias. MAE and
// ReLU subgradients at 0 are taken as 0; the L1 activity term contributes
// l1_lambda per active hidden unit.
template <typename Scalar>
BackwardResult<Scalar> backward(const LayerParams<Scalar>& encoder,
                                const LayerParams<Scalar>& decoder, const MatrixX<Scalar>& x,
                                Real l1_lambda) {
    if (x.cols() == 0) throw DataError("backward: empty minibatch");
    const auto features = static_cast<Scalar>(x.rows());
    const auto batch = static_cast<Scalar>(x.cols());

    const BatchActivation<Scalar> act = forward_batch(encoder, decoder, x);
    const MatrixX<Scalar> residual = act.reconstruction - x;

    BackwardResult<Scalar> out;
    out.mean_loss = residual.cwiseAbs().sum() / (features * batch) +
                    static_cast<Scalar>(l1_lambda) * act.hidden.sum() / batch;

    // d(mean loss)/d(reconstruction), sign of the residual scaled by 1/(F*B)
    const MatrixX<Scalar> g_out =
        residual.unaryExpr([](Scalar r) { return detail::sgn(r); }) / (features * batch);

    out.grads.decoder.weights.noalias() = g_out * act.hidden.transpose();
    out.grads.decoder.biases = g_out.rowwise().sum();

    // Mask of active hidden units; doubles as the L1 subgradient since
    // hidden >= 0.
    const MatrixX<Scalar> mask =
        (act.preactivation.array() > Scalar(0)).template cast<Scalar>().matrix();
    MatrixX<Scalar> g_pre = decoder.weights.transpose() * g_out;
    g_pre += (static_cast<Scalar>(l1_lambda) / batch) * mask;
    g_pre = g_pre.cwiseProduct(mask);

    out.grads.encoder.weights.noalias() = g_pre * x.transpose();
    out.grads.encoder.biases = g_pre.rowwise().sum();
    return out;
}

template <typename Scalar>
BackwardResult<Scalar> backward(const AutoencoderModel<Scalar>& model, const MatrixX<Scalar>& x,
                                Real l1_lambda) {
    return backward(model.encoder, model.decoder, x, l1_lambda);
}

template <typename Scalar>
AdamState<Scalar> init_adam(const AutoencoderModel<Scalar>& model) {
    AdamState<Scalar> st;
    auto zero_like = [](const LayerParams<Scalar>& p) {
        return LayerParams<Scalar>{MatrixX<Scalar>::Zero(p.weights.rows(), p.weights.cols()),
                                   VectorX<Scalar>::Zero(p.biases.size())};
    };
    st.m.encoder = zero_like(model.encoder);
    st.m.decoder = zero_like(model.decoder);
    st.v.encoder = zero_like(model.encoder);
    st.v.decoder = zero_like(model.decoder);
    return st;
}

namespace detail {

// Standard Adam update with bias correction for one tensor.
template <typename Scalar, typename Derived>
void adam_update(Eigen::MatrixBase<Derived>& params, const Eigen::MatrixBase<Derived>& grads,
                 Eigen::MatrixBase<Derived>& m, Eigen::MatrixBase<Derived>& v, std::int64_t t,
                 const TrainConfig& cfg) {
    const auto b1 = static_cast<Scalar>(cfg.adam_beta1);
    const auto b2 = static_cast<Scalar>(cfg.adam_beta2);
    const auto lr = static_cast<Scalar>(cfg.learning_rate);
    const auto eps = static_cast<Scalar>(cfg.adam_epsilon);
    m = b1 * m + (Scalar(1) - b1) * grads;
    v = b2 * v.derived() + (Scalar(1) - b2) * grads.derived().cwiseProduct(grads.derived());
    const Scalar c1 = Scalar(1) - static_cast<Scalar>(std::pow(cfg.adam_beta1, t));
    const Scalar c2 = Scalar(1) - static_cast<Scalar>(std::pow(cfg.adam_beta2, t));
    params -=
        (lr * (m / c1).array() / ((v / c2).array().sqrt() + eps)).matrix();
}

}  // namespace detail

// One Adam step over every parameter tensor; increments the step counter.
template <typename Scalar>
void adam_step(ModelParams<Scalar>& params, const ModelParams<Scalar>& grads,
               AdamState<Scalar>& state, const TrainConfig& cfg) {
    state.t += 1;
    detail::adam_update<Scalar>(params.encoder.weights, grads.encoder.weights,
                                state.m.encoder.weights, state.v.encoder.weights, state.t, cfg);
    detail::adam_update<Scalar>(params.encoder.biases, grads.encoder.biases,
                                state.m.encoder.biases, state.v.encoder.biases, state.t, cfg);
    detail::adam_update<Scalar>(params.decoder.weights, grads.decoder.weights,
                                state.m.decoder.weights, state.v.decoder.weights, state.t, cfg);
    detail::adam_update<Scalar>(params.decoder.biases, grads.decoder.biases,
                                state.m.decoder.biases, state.v.decoder.biases, state.t, cfg);
}

// E(x) = (1/F) * sum_i |x_i - xhat_i|; the regularization term is excluded.
template <typename Scalar>
Scalar reconstruction_error(const AutoencoderModel<Scalar>& model, const VectorX<Scalar>& x) {
    const Activation<Scalar> act = forward(model, x);
    return (x - act.reconstruction).cwiseAbs().sum() / static_cast<Scalar>(x.size());
}

// Largest per-feature residual for one record. Read-only companion statistic
// to the mean-based reconstruction error.
template <typename Scalar>
Scalar max_feature_error(const AutoencoderModel<Scalar>& model, const VectorX<Scalar>& x) {
    const Activation<Scalar> act = forward(model, x);
    return (x - act.reconstruction).cwiseAbs().maxCoeff();
}

// Batched scoring; same values as per-record reconstruction_error calls.
template <typename Scalar>
std::vector<Scalar> reconstruction_errors(const AutoencoderModel<Scalar>& model,
                                          const MatrixX<Scalar>& x) {
    const BatchActivation<Scalar> act = forward_batch(model, x);
    const VectorX<Scalar> per_record =
        (x - act.reconstruction).cwiseAbs().colwise().sum() / static_cast<Scalar>(x.rows());
    return std::vector<Scalar>(per_record.data(), per_record.data() + per_record.size());
}

// Packs records into an F x N matrix, one sample per column.
template <typename Scalar = Real>
MatrixX<Scalar> pack_features(const std::vector<TelemetryRecord>& records, Index features) {
    MatrixX<Scalar> x(features, static_cast<Index>(records.size()));
    for (Index i = 0; i < x.cols(); ++i) {
        const auto& f = records[static_cast<std::size_t>(i)].features;
        if (f.size() != features)
            throw DataError("pack_features: record width " + std::to_string(f.size()) +
                            " does not match expected " + std::to_string(features));
        x.col(i) = f.template cast<Scalar>();
    }
    return x;
}

template <typename Scalar>
struct TrainResult {
    AutoencoderModel<Scalar> model;
    std::vector<Scalar> epoch_loss;  // mean per-sample loss per epoch
};

// Trains a fresh model on ds.train (which must already be normalized):
// cfg.epochs epochs over seeded-shuffled minibatches of cfg.batch_size, the
// last short batch kept. The shuffle seed advances per epoch. Aborts with
// DivergenceError if any batch loss turns non-finite. train_mae is the mean
// reconstruction error over the training set under the final weights.
template <typename Scalar = Real>
TrainResult<Scalar> train(const NodeDataset& ds, const TrainConfig& cfg) {
    if (ds.train.empty()) throw DataError("train: empty training set for node " + ds.node_id);
    if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.learning_rate <= 0 || cfg.l1_lambda < 0)
        throw ConfigError("train: invalid hyperparameters");

    const Index features = ds.train.front().features.size();
    const MatrixX<Scalar> data = pack_features<Scalar>(ds.train, features);
    const Index n = data.cols();

    TrainResult<Scalar> result;
    result.model = init_model<Scalar>(features, cfg);
    result.model.node_id = ds.node_id;
    AdamState<Scalar> state = init_adam(result.model);

    ModelParams<Scalar> params{result.model.encoder, result.model.decoder};
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index(0));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.rng_seed, "epoch", static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        Scalar loss_sum = 0;
        for (Index start = 0; start < n; start += cfg.batch_size) {
            const Index b = std::min<Index>(cfg.batch_size, n - start);
            MatrixX<Scalar> batch(features, b);
            for (Index j = 0; j < b; ++j)
                batch.col(j) = data.col(order[static_cast<std::size_t>(start + j)]);

            const BackwardResult<Scalar> back =
                backward(params.encoder, params.decoder, batch, cfg.l1_lambda);
            if (!std::isfinite(static_cast<double>(back.mean_loss)))
                throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                      ", node " + ds.node_id);
            loss_sum += back.mean_loss * static_cast<Scalar>(b);
            adam_step(params, back.grads, state, cfg);
        }
        result.epoch_loss.push_back(loss_sum / static_cast<Scalar>(n));
    }

    result.model.encoder = std::move(params.encoder);
    result.model.decoder = std::move(params.decoder);

    const std::vector<Scalar> errors = reconstruction_errors(result.model, data);
    result.model.train_mae =
        std::accumulate(errors.begin(), errors.end(), Scalar(0)) / static_cast<Scalar>(n);
    return result;
}

}  // namespace aedet
