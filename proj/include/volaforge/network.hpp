#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "volaforge/core.hpp"

namespace volaforge {

// ---------------------------------------------------------------------------
// Feed-forward networks, geometric-pyramid family
// ---------------------------------------------------------------------------

struct NetworkSpec {
    std::vector<int> hidden = {4, 2};   // neurons per hidden layer
    double lrelu_slope = 0.01;          // c in L-ReLU(x) = x>=0 ? x : c*x
    double dropout = 0.8;               // see dropout_is_keep_probability
    bool dropout_is_keep_probability = true;
    double learning_rate = 1e-3;        // Adam step size
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int max_epochs = 500;
    int patience = 100;                 // early stopping on validation MSE
    std::uint64_t seed = 1;

    // The source convention for "drop-out = 0.8" is ambiguous; default reads
    // it as the KEEP probability, the switch flips it to a drop rate.
    double keep_probability() const {
        return dropout_is_keep_probability ? dropout : 1.0 - dropout;
    }

    void validate() const {
        if (hidden.empty()) throw ConfigError("NetworkSpec: need at least one hidden layer");
        for (std::size_t l = 0; l < hidden.size(); ++l) {
            if (hidden[l] < 1) throw ConfigError("NetworkSpec: layer width must be >= 1");
            if (l > 0 && hidden[l] * 2 != hidden[l - 1])
                throw ConfigError("NetworkSpec: layer widths must halve (geometric pyramid)");
        }
        if (lrelu_slope < 0.0) throw ConfigError("NetworkSpec: L-ReLU slope must be >= 0");
        const double keep = keep_probability();
        if (keep <= 0.0 || keep > 1.0) throw ConfigError("NetworkSpec: keep probability in (0,1]");
        if (max_epochs < 1 || patience < 0) throw ConfigError("NetworkSpec: bad epoch/patience");
    }
};

/// The four pyramid architectures: 1 -> (2), 2 -> (4,2), 3 -> (8,4,2),
/// 4 -> (16,8,4,2).
inline std::vector<int> pyramid_architecture(int index) {
    switch (index) {
        case 1: return {2};
        case 2: return {4, 2};
        case 3: return {8, 4, 2};
        case 4: return {16, 8, 4, 2};
        default: throw ConfigError("pyramid_architecture: index must be 1..4");
    }
}

struct TrainedNetwork {
    std::vector<int> layer_sizes;                  // input, hidden..., output(1)
    std::vector<std::vector<double>> weights;      // per layer, row-major (out x in)
    std::vector<std::vector<double>> biases;       // per layer
    double lrelu_slope = 0.01;
    std::vector<double> train_mse_history;
    std::vector<double> val_mse_history;
    int stopped_epoch = 0;
    double best_val_mse = 0.0;
    std::uint64_t seed = 0;

    std::size_t n_layers() const { return weights.size(); }

    /// Inference-mode forward pass (no dropout mask, no rescaling; training
    /// uses inverted dropout so inference weights need no correction).
    double predict(std::span<const double> row) const {
        if (row.size() != static_cast<std::size_t>(layer_sizes.front()))
            throw DataError("network predict: expected " + std::to_string(layer_sizes.front()) +
                            " inputs, got " + std::to_string(row.size()));
        std::vector<double> a(row.begin(), row.end());
        std::vector<double> z;
        for (std::size_t l = 0; l < n_layers(); ++l) {
            const auto out_n = static_cast<std::size_t>(layer_sizes[l + 1]);
            const auto in_n = static_cast<std::size_t>(layer_sizes[l]);
            z.assign(out_n, 0.0);
            for (std::size_t o = 0; o < out_n; ++o) {
                double s = biases[l][o];
                const double* w = &weights[l][o * in_n];
                for (std::size_t i = 0; i < in_n; ++i) s += w[i] * a[i];
                z[o] = s;
            }
            if (l + 1 < n_layers())
                for (auto& v : z) v = v >= 0.0 ? v : lrelu_slope * v;   // hidden: L-ReLU
            a = z;                                                      // output: linear
        }
        return a[0];
    }
};

/// One example's dropout multipliers per hidden layer: 0 for dropped neurons,
/// 1/keep for retained ones (inverted dropout).
using DropoutMask = std::vector<std::vector<double>>;

inline DropoutMask draw_dropout_mask(const TrainedNetwork& net, double keep, Rng& rng) {
    DropoutMask mask(net.n_layers() - 1);
    const double inv_keep = 1.0 / keep;
    for (std::size_t l = 0; l + 1 < net.n_layers(); ++l) {
        mask[l].resize(static_cast<std::size_t>(net.layer_sizes[l + 1]));
        for (auto& m : mask[l]) m = (keep >= 1.0 || rng.u01() < keep) ? inv_keep : 0.0;
    }
    return mask;
}

/// Forward pass. `mask` null runs inference (no dropout, no rescaling);
/// otherwise hidden activations are multiplied by the mask entries.
inline double forward(const TrainedNetwork& net, std::span<const double> row,
                      const DropoutMask* mask = nullptr) {
    if (row.size() != static_cast<std::size_t>(net.layer_sizes.front()))
        throw DataError("forward: input dimension mismatch");
    std::vector<double> a(row.begin(), row.end());
    std::vector<double> z;
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
        const auto out_n = static_cast<std::size_t>(net.layer_sizes[l + 1]);
        const auto in_n = static_cast<std::size_t>(net.layer_sizes[l]);
        z.assign(out_n, 0.0);
        for (std::size_t o = 0; o < out_n; ++o) {
            double s = net.biases[l][o];
            const double* w = &net.weights[l][o * in_n];
            for (std::size_t i = 0; i < in_n; ++i) s += w[i] * a[i];
            z[o] = s;
        }
        if (l + 1 < net.n_layers()) {
            for (std::size_t o = 0; o < out_n; ++o) {
                double v = z[o] >= 0.0 ? z[o] : net.lrelu_slope * z[o];
                if (mask) v *= (*mask)[l][o];
                z[o] = v;
            }
        }
        a = z;
    }
    return a[0];
}

namespace detail {

/// Per-layer dropout masks for every training example; entries are 0 or
/// 1/keep (inverted dropout).
using DropoutMasks = std::vector<DropoutMask>;   // [example][hidden layer][neuron]

inline DropoutMasks draw_masks(std::size_t n_examples, const std::vector<int>& hidden,
                               double keep, Rng& rng) {
    DropoutMasks masks(n_examples);
    const double inv_keep = 1.0 / keep;
    for (auto& per_example : masks) {
        per_example.resize(hidden.size());
        for (std::size_t l = 0; l < hidden.size(); ++l) {
            per_example[l].resize(static_cast<std::size_t>(hidden[l]));
            for (auto& m : per_example[l]) m = (keep >= 1.0 || rng.u01() < keep) ? inv_keep : 0.0;
        }
    }
    return masks;
}

struct GradientBuffers {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
};

/// Mean-squared-error loss over the batch and its gradient w.r.t. every
/// weight and bias, for FIXED dropout masks (pass empty masks for none).
/// A fixed reduction order keeps training bit-reproducible.
inline double loss_and_gradients(const TrainedNetwork& net,
                                 const std::vector<std::vector<double>>& x,
                                 const std::vector<double>& y, const DropoutMasks& masks,
                                 GradientBuffers& grad) {
    const std::size_t layers = net.n_layers();
    grad.weights.resize(layers);
    grad.biases.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        grad.weights[l].assign(net.weights[l].size(), 0.0);
        grad.biases[l].assign(net.biases[l].size(), 0.0);
    }
    const double inv_n = 1.0 / static_cast<double>(x.size());
    double loss = 0.0;

    std::vector<std::vector<double>> act(layers + 1);   // post-activation (masked)
    std::vector<std::vector<double>> pre(layers);       // pre-activation
    std::vector<double> delta, delta_prev;

    for (std::size_t t = 0; t < x.size(); ++t) {
        act[0].assign(x[t].begin(), x[t].end());
        for (std::size_t l = 0; l < layers; ++l) {
            const auto out_n = static_cast<std::size_t>(net.layer_sizes[l + 1]);
            const auto in_n = static_cast<std::size_t>(net.layer_sizes[l]);
            pre[l].assign(out_n, 0.0);
            for (std::size_t o = 0; o < out_n; ++o) {
                double s = net.biases[l][o];
                const double* w = &net.weights[l][o * in_n];
                for (std::size_t i = 0; i < in_n; ++i) s += w[i] * act[l][i];
                pre[l][o] = s;
            }
            act[l + 1].resize(out_n);
            if (l + 1 < layers) {
                for (std::size_t o = 0; o < out_n; ++o) {
                    double a = pre[l][o] >= 0.0 ? pre[l][o] : net.lrelu_slope * pre[l][o];
                    if (!masks.empty()) a *= masks[t][l][o];
                    act[l + 1][o] = a;
                }
            } else {
                act[l + 1][0] = pre[l][0];
            }
        }
        const double err = act[layers][0] - y[t];
        loss += err * err;

        // backward
        delta.assign(1, 2.0 * err * inv_n);
        for (std::size_t li = layers; li-- > 0;) {
            const auto out_n = static_cast<std::size_t>(net.layer_sizes[li + 1]);
            const auto in_n = static_cast<std::size_t>(net.layer_sizes[li]);
            for (std::size_t o = 0; o < out_n; ++o) {
                grad.biases[li][o] += delta[o];
                double* gw = &grad.weights[li][o * in_n];
                for (std::size_t i = 0; i < in_n; ++i) gw[i] += delta[o] * act[li][i];
            }
            if (li == 0) break;
            delta_prev.assign(in_n, 0.0);
            for (std::size_t o = 0; o < out_n; ++o) {
                const double* w = &net.weights[li][o * in_n];
                for (std::size_t i = 0; i < in_n; ++i) delta_prev[i] += w[i] * delta[o];
            }
            // through the previous layer's mask and activation derivative
            for (std::size_t i = 0; i < in_n; ++i) {
                double d = delta_prev[i];
                if (!masks.empty()) d *= masks[t][li - 1][i];
                d *= pre[li - 1][i] >= 0.0 ? 1.0 : net.lrelu_slope;
                delta_prev[i] = d;
            }
            delta = delta_prev;
        }
    }
    return loss * inv_n;
}

inline double inference_mse(const TrainedNetwork& net, const std::vector<std::vector<double>>& x,
                            const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        const double d = net.predict(x[t]) - y[t];
        s += d * d;
    }
    return s / static_cast<double>(x.size());
}

}  // namespace detail

/// Glorot-normal initialization truncated at two standard deviations;
/// biases start at zero.
inline TrainedNetwork init_network(const NetworkSpec& spec, int n_inputs, Rng& rng) {
    spec.validate();
    TrainedNetwork net;
    net.lrelu_slope = spec.lrelu_slope;
    net.seed = spec.seed;
    net.layer_sizes.push_back(n_inputs);
    for (int h : spec.hidden) net.layer_sizes.push_back(h);
    net.layer_sizes.push_back(1);
    for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
        const auto in_n = static_cast<std::size_t>(net.layer_sizes[l]);
        const auto out_n = static_cast<std::size_t>(net.layer_sizes[l + 1]);
        const double sd = std::sqrt(2.0 / static_cast<double>(in_n + out_n));
        std::vector<double> w(in_n * out_n);
        for (auto& v : w) v = rng.truncated_gauss(sd, -2.0 * sd, 2.0 * sd);
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(out_n, 0.0);
    }
    return net;
}

struct NetData {
    std::vector<std::vector<double>> x_train;
    std::vector<double> y_train;
    std::vector<std::vector<double>> x_val;
    std::vector<double> y_val;
};

/// Full-batch Adam on squared error with inverted dropout and early stopping:
/// training halts once the validation MSE has not improved for `patience`
/// epochs (or at the epoch cap) and the best-validation weights are restored.
inline TrainedNetwork train_network(const NetworkSpec& spec, const NetData& data) {
    spec.validate();
    if (data.x_train.empty() || data.x_val.empty())
        throw DataError("train_network: need training and validation rows");
    Rng root(spec.seed);
    Rng init_rng = root.stream("init");
    Rng dropout_rng = root.stream("dropout");

    TrainedNetwork net = init_network(spec, static_cast<int>(data.x_train.front().size()), init_rng);
    const double keep = spec.keep_probability();

    detail::GradientBuffers grad;
    std::vector<std::vector<double>> m_w(net.n_layers()), v_w(net.n_layers());
    std::vector<std::vector<double>> m_b(net.n_layers()), v_b(net.n_layers());
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
        m_w[l].assign(net.weights[l].size(), 0.0);
        v_w[l].assign(net.weights[l].size(), 0.0);
        m_b[l].assign(net.biases[l].size(), 0.0);
        v_b[l].assign(net.biases[l].size(), 0.0);
    }

    std::vector<std::vector<double>> best_w = net.weights;
    std::vector<std::vector<double>> best_b = net.biases;
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;

    for (int epoch = 1; epoch <= spec.max_epochs; ++epoch) {
        detail::DropoutMasks masks;
        if (keep < 1.0)
            masks = detail::draw_masks(data.x_train.size(), spec.hidden, keep, dropout_rng);
        const double batch_loss =
            detail::loss_and_gradients(net, data.x_train, data.y_train, masks, grad);
        if (!std::isfinite(batch_loss))
            throw NumericError("train_network: loss diverged at epoch " + std::to_string(epoch));

        const double bc1 = 1.0 - std::pow(spec.adam_beta1, epoch);
        const double bc2 = 1.0 - std::pow(spec.adam_beta2, epoch);
        for (std::size_t l = 0; l < net.n_layers(); ++l) {
            for (std::size_t i = 0; i < net.weights[l].size(); ++i) {
                const double g = grad.weights[l][i];
                m_w[l][i] = spec.adam_beta1 * m_w[l][i] + (1.0 - spec.adam_beta1) * g;
                v_w[l][i] = spec.adam_beta2 * v_w[l][i] + (1.0 - spec.adam_beta2) * g * g;
                net.weights[l][i] -= spec.learning_rate * (m_w[l][i] / bc1) /
                                     (std::sqrt(v_w[l][i] / bc2) + spec.adam_eps);
            }
            for (std::size_t i = 0; i < net.biases[l].size(); ++i) {
                const double g = grad.biases[l][i];
                m_b[l][i] = spec.adam_beta1 * m_b[l][i] + (1.0 - spec.adam_beta1) * g;
                v_b[l][i] = spec.adam_beta2 * v_b[l][i] + (1.0 - spec.adam_beta2) * g * g;
                net.biases[l][i] -= spec.learning_rate * (m_b[l][i] / bc1) /
                                    (std::sqrt(v_b[l][i] / bc2) + spec.adam_eps);
            }
        }

        net.train_mse_history.push_back(detail::inference_mse(net, data.x_train, data.y_train));
        const double val = detail::inference_mse(net, data.x_val, data.y_val);
        net.val_mse_history.push_back(val);
        net.stopped_epoch = epoch;

        if (val < best_val) {
            best_val = val;
            best_w = net.weights;
            best_b = net.biases;
            since_best = 0;
        } else {
            ++since_best;
            if (since_best > spec.patience) break;
        }
    }

    net.weights = std::move(best_w);
    net.biases = std::move(best_b);
    net.best_val_mse = best_val;
    return net;
}

// ---------------------------------------------------------------------------
// Seed ensembles
// ---------------------------------------------------------------------------

/// Members ranked ascending by validation MSE (ties by seed). The forecast is
/// either the best member or the mean of the ten best.
struct SeedEnsemble {
    std::vector<TrainedNetwork> members;
    int requested = 0;
    int failures = 0;

    double predict(std::span<const double> row, int best_k) const {
        if (best_k < 1 || static_cast<std::size_t>(best_k) > members.size())
            throw ConfigError("SeedEnsemble::predict: need " + std::to_string(best_k) +
                              " trained members, have " + std::to_string(members.size()));
        double s = 0.0;
        for (int k = 0; k < best_k; ++k) s += members[static_cast<std::size_t>(k)].predict(row);
        return s / static_cast<double>(best_k);
    }
};

/// Trains `n_seeds` independent networks (parallel across members) whose
/// seeds derive from spec.seed. Failed trainings are counted and dropped.
inline SeedEnsemble train_seed_ensemble(const NetworkSpec& spec, const NetData& data,
                                        int n_seeds = 100, int jobs = 0) {
    if (n_seeds < 1) throw ConfigError("train_seed_ensemble: need at least one seed");
    SeedEnsemble ensemble;
    ensemble.requested = n_seeds;
    std::vector<std::optional<TrainedNetwork>> slots(static_cast<std::size_t>(n_seeds));
    const Rng base(spec.seed);
    parallel_for(static_cast<std::size_t>(n_seeds), jobs, [&](std::size_t k) {
        NetworkSpec member = spec;
        member.seed = base.stream(k).seed();
        try {
            slots[k] = train_network(member, data);
        } catch (const NumericError&) {
            slots[k] = std::nullopt;
        }
    });
    for (auto& s : slots) {
        if (s)
            ensemble.members.push_back(std::move(*s));
        else
            ++ensemble.failures;
    }
    if (ensemble.members.empty()) throw NumericError("train_seed_ensemble: every member diverged");
    std::sort(ensemble.members.begin(), ensemble.members.end(),
              [](const TrainedNetwork& a, const TrainedNetwork& b) {
                  if (a.best_val_mse != b.best_val_mse) return a.best_val_mse < b.best_val_mse;
                  return a.seed < b.seed;
              });
    return ensemble;
}

}  // namespace volaforge
