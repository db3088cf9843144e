#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <utility>

#include "volaforge/linear.hpp"
#include "volaforge/network.hpp"
#include "volaforge/tree.hpp"

namespace volaforge {

/// Uniform handle over any fitted forecaster. Implementations are immutable
/// after construction; predict is safe to call concurrently.
class Forecaster {
  public:
    virtual ~Forecaster() = default;
    virtual double predict(std::span<const double> row) const = 0;
};

class LinearForecaster final : public Forecaster {
  public:
    LinearForecaster(LinearFit fit, bool log_space = false)
        : fit_(std::move(fit)), log_space_(log_space) {}
    double predict(std::span<const double> row) const override {
        return predict_linear(fit_, row, log_space_);
    }
    const LinearFit& fit() const { return fit_; }

  private:
    LinearFit fit_;
    bool log_space_;
};

class EnsembleForecaster final : public Forecaster {
  public:
    explicit EnsembleForecaster(TreeEnsemble e) : ensemble_(std::move(e)) {}
    double predict(std::span<const double> row) const override { return ensemble_.predict(row); }
    const TreeEnsemble& ensemble() const { return ensemble_; }

  private:
    TreeEnsemble ensemble_;
};

class NetworkForecaster final : public Forecaster {
  public:
    NetworkForecaster(std::shared_ptr<const SeedEnsemble> ensemble, int best_k)
        : ensemble_(std::move(ensemble)), best_k_(best_k) {}
    double predict(std::span<const double> row) const override {
        return ensemble_->predict(row, best_k_);
    }

  private:
    std::shared_ptr<const SeedEnsemble> ensemble_;
    int best_k_;
};

/// Wraps an arbitrary callable (analytic oracles in tests).
class FunctionForecaster final : public Forecaster {
  public:
    explicit FunctionForecaster(std::function<double(std::span<const double>)> fn)
        : fn_(std::move(fn)) {}
    double predict(std::span<const double> row) const override { return fn_(row); }

  private:
    std::function<double(std::span<const double>)> fn_;
};

/// Maps model-space predictions (scaled, possibly log) back to natural
/// realized-variance units. For log targets the half-variance term corrects
/// the Jensen bias of the exponential; the stored residual variance is in
/// scaled units and is blown up by std^2.
struct TargetTransform {
    double mean = 0.0;
    double std = 1.0;
    bool log_space = false;
    double scaled_residual_variance = 0.0;

    double to_natural(double model_space) const {
        const double u = model_space * std + mean;
        if (log_space) return std::exp(u + 0.5 * scaled_residual_variance * std * std);
        return u;
    }
};

/// A fitted model exposed in natural target units.
class TransformedForecaster final : public Forecaster {
  public:
    TransformedForecaster(std::shared_ptr<const Forecaster> inner, TargetTransform transform)
        : inner_(std::move(inner)), transform_(transform) {}
    double predict(std::span<const double> row) const override {
        return transform_.to_natural(inner_->predict(row));
    }

  private:
    std::shared_ptr<const Forecaster> inner_;
    TargetTransform transform_;
};

}  // namespace volaforge
