#pragma once

#include <json.hpp>

#include "volaforge/linear.hpp"
#include "volaforge/network.hpp"

namespace volaforge {

/// Fitted linear weights as `{intercept, weights: {name: value}, penalty}`.
inline nlohmann::json linear_fit_to_json(const LinearFit& fit) {
    nlohmann::json weights = nlohmann::json::object();
    for (std::size_t i = 0; i < fit.weights.size(); ++i) {
        const std::string name =
            i < fit.feature_names.size() ? fit.feature_names[i] : "x" + std::to_string(i);
        weights[name] = fit.weights[i];
    }
    nlohmann::json penalty;
    switch (fit.penalty.kind) {
        case PenaltyKind::None: penalty = "none"; break;
        case PenaltyKind::Ridge: penalty = {{"ridge", {{"lambda", fit.penalty.lambda}}}}; break;
        case PenaltyKind::Lasso: penalty = {{"lasso", {{"lambda", fit.penalty.lambda}}}}; break;
        case PenaltyKind::ElasticNet:
            penalty = {{"elastic_net",
                        {{"lambda", fit.penalty.lambda}, {"alpha", fit.penalty.alpha}}}};
            break;
        case PenaltyKind::AdaptiveLasso:
            penalty = {{"adaptive_lasso", {{"lambda", fit.penalty.lambda}}}};
            break;
    }
    return nlohmann::json{{"intercept", fit.intercept},
                          {"weights", weights},
                          {"penalty", penalty},
                          {"residual_variance", fit.residual_variance}};
}

/// Versioned layer-major snapshot of a trained network.
inline nlohmann::json network_to_json(const TrainedNetwork& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
        layers.push_back({{"in", net.layer_sizes[l]},
                          {"out", net.layer_sizes[l + 1]},
                          {"weights", net.weights[l]},
                          {"biases", net.biases[l]}});
    }
    return nlohmann::json{{"format_version", 1},
                          {"lrelu_slope", net.lrelu_slope},
                          {"seed", net.seed},
                          {"stopped_epoch", net.stopped_epoch},
                          {"best_val_mse", net.best_val_mse},
                          {"layers", layers}};
}

inline TrainedNetwork network_from_json(const nlohmann::json& j) {
    if (j.at("format_version").get<int>() != 1)
        throw DataError("network_from_json: unsupported format version");
    TrainedNetwork net;
    net.lrelu_slope = j.at("lrelu_slope").get<double>();
    net.seed = j.at("seed").get<std::uint64_t>();
    net.stopped_epoch = j.at("stopped_epoch").get<int>();
    net.best_val_mse = j.at("best_val_mse").get<double>();
    for (const auto& layer : j.at("layers")) {
        if (net.layer_sizes.empty()) net.layer_sizes.push_back(layer.at("in").get<int>());
        net.layer_sizes.push_back(layer.at("out").get<int>());
        net.weights.push_back(layer.at("weights").get<std::vector<double>>());
        net.biases.push_back(layer.at("biases").get<std::vector<double>>());
    }
    if (net.weights.empty()) throw DataError("network_from_json: no layers");
    return net;
}

}  // namespace volaforge
