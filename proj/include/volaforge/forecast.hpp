#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "volaforge/dataset.hpp"
#include "volaforge/models.hpp"

namespace volaforge {

// ---------------------------------------------------------------------------
// Hyperparameter grids (defaults as published; every knob overridable)
// ---------------------------------------------------------------------------

struct TuningGrid {
    int lambda_points = 1000;
    double lambda_min = 1e-5;
    double lambda_max = 1e2;
    int alpha_points = 10;
    std::vector<int> gb_depths = {1, 2};
    std::vector<int> gb_trees = {50, 100, 150, 200, 250, 300, 350, 400, 450, 500};
    std::vector<double> gb_learning_rates = {0.01, 0.1};
    int bag_trees = 500;
    int rf_trees = 500;
    int min_node_size = 5;

    /// Log-uniform lambda grid, descending (strongest regularization first,
    /// which also orders the warm-started descent).
    std::vector<double> lambdas() const {
        if (lambda_points < 1) throw ConfigError("TuningGrid: empty lambda grid");
        std::vector<double> out(static_cast<std::size_t>(lambda_points));
        if (lambda_points == 1) {
            out[0] = lambda_max;
            return out;
        }
        const double lo = std::log(lambda_min), hi = std::log(lambda_max);
        for (int i = 0; i < lambda_points; ++i)
            out[static_cast<std::size_t>(i)] =
                std::exp(hi + (lo - hi) * static_cast<double>(i) /
                                  static_cast<double>(lambda_points - 1));
        return out;
    }

    std::vector<double> alphas() const {
        if (alpha_points < 1) throw ConfigError("TuningGrid: empty alpha grid");
        std::vector<double> out(static_cast<std::size_t>(alpha_points));
        if (alpha_points == 1) {
            out[0] = 0.5;
            return out;
        }
        for (int i = 0; i < alpha_points; ++i)
            out[static_cast<std::size_t>(i)] =
                static_cast<double>(i) / static_cast<double>(alpha_points - 1);
        return out;
    }
};

/// Training profile for the neural models (the test/demo profile shrinks it).
struct NnProfile {
    int seeds = 100;
    int max_epochs = 500;
    int patience = 100;
    double dropout = 0.8;
    bool dropout_is_keep = true;
};

// ---------------------------------------------------------------------------
// Window policy
// ---------------------------------------------------------------------------

enum class WindowMode {
    RollingMerged,   // train+validation merged, re-fit daily, no tuning
    RollingTuned,    // rolling train/validation windows, re-tuned daily
    Fixed,           // fit once on the initial sample (neural networks)
};

inline WindowMode window_mode(ModelId id) {
    switch (id) {
        case ModelId::Har:
        case ModelId::HarX:
        case ModelId::LogHar:
        case ModelId::LevHar:
        case ModelId::Shar:
        case ModelId::Harq:
        case ModelId::Bagging:
        case ModelId::RandomForest:
            return WindowMode::RollingMerged;
        case ModelId::Ridge:
        case ModelId::Lasso:
        case ModelId::ElasticNet:
        case ModelId::AdaptiveLasso:
        case ModelId::PostLasso:
        case ModelId::GradientBoosting:
            return WindowMode::RollingTuned;
        default:
            return WindowMode::Fixed;
    }
}

// ---------------------------------------------------------------------------
// Forecast sanitation
// ---------------------------------------------------------------------------

struct TrainStats {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
};

inline TrainStats target_stats(const FeatureMatrix& fm, IndexRange rows) {
    if (rows.size() == 0) throw SizingError("target_stats: empty window");
    TrainStats s;
    s.min = s.max = fm.realized[rows.begin];
    KahanSum sum;
    for (std::size_t r = rows.begin; r < rows.end; ++r) {
        s.min = std::min(s.min, fm.realized[r]);
        s.max = std::max(s.max, fm.realized[r]);
        sum.add(fm.realized[r]);
    }
    s.mean = sum.value() / static_cast<double>(rows.size());
    return s;
}

/// Total function. Non-finite or sub-minimum forecasts are replaced with the
/// in-sample minimum; the quarticity model additionally snaps anything
/// outside the in-sample target range to the in-sample mean.
inline double sanitize_forecast(ModelId id, double raw, const TrainStats& stats) {
    if (id == ModelId::Harq) {
        if (!std::isfinite(raw)) return stats.mean;
        if (raw < stats.min || raw > stats.max) return stats.mean;
        return raw;
    }
    if (!std::isfinite(raw)) return stats.min;
    if (raw < stats.min) return stats.min;
    return raw;
}

// ---------------------------------------------------------------------------
// Tuning
// ---------------------------------------------------------------------------

struct Hyperparameters {
    double lambda = 0.0;
    double alpha = 0.0;
    int gb_depth = 0;
    int gb_trees = 0;
    double gb_learning_rate = 0.0;
    double validation_mse = 0.0;
};

namespace detail {

inline double linear_window_mse(const LinearFit& fit, const FeatureMatrix& fm, IndexRange rows) {
    KahanSum s;
    for (std::size_t r = rows.begin; r < rows.end; ++r) {
        const double e = fm.target[r] - predict_linear(fit, fm.rows[r]);
        s.add(e * e);
    }
    return s.value() / static_cast<double>(rows.size());
}

/// Tuned fit of a penalized linear model over explicit train/validation
/// windows. Warm starts run down the lambda grid; ties in validation MSE
/// resolve toward stronger regularization (larger lambda, then smaller
/// alpha).
inline std::pair<LinearFit, Hyperparameters> tuned_linear_fit(ModelId id, const FeatureMatrix& fm,
                                                              const TuningGrid& grid,
                                                              IndexRange train, IndexRange val) {
    const auto lambdas = grid.lambdas();
    const auto gram = gram_stats(fm, train);
    const auto j = static_cast<Eigen::Index>(fm.n_cols());

    std::optional<LinearFit> best;
    Hyperparameters best_hp;
    double best_mse = std::numeric_limits<double>::infinity();

    auto consider = [&](LinearFit&& fit, double lambda, double alpha) {
        const double mse = linear_window_mse(fit, fm, val);
        if (mse < best_mse) {
            best_mse = mse;
            best = std::move(fit);
            best_hp = Hyperparameters{lambda, alpha, 0, 0, 0.0, mse};
        }
    };

    switch (id) {
        case ModelId::Ridge: {
            for (double lambda : lambdas) {
                const Eigen::VectorXd beta =
                    solve_normal_equations(gram, lambda, /*allow_jitter=*/lambda == 0.0, nullptr);
                LinearFit fit = finalize(fm, gram, beta, Penalty{PenaltyKind::Ridge, lambda, 0.0, {}});
                consider(std::move(fit), lambda, 0.0);
            }
            break;
        }
        case ModelId::Lasso: {
            Eigen::VectorXd beta = Eigen::VectorXd::Zero(j);
            for (double lambda : lambdas) {
                coordinate_descent(gram, lambda, 0.0, {}, beta, {});
                LinearFit fit = finalize(fm, gram, beta, Penalty{PenaltyKind::Lasso, lambda, 0.0, {}});
                consider(std::move(fit), lambda, 0.0);
            }
            break;
        }
        case ModelId::ElasticNet: {
            for (double alpha : grid.alphas()) {
                Eigen::VectorXd beta = Eigen::VectorXd::Zero(j);
                for (double lambda : lambdas) {
                    coordinate_descent(gram, lambda, alpha, {}, beta, {});
                    LinearFit fit =
                        finalize(fm, gram, beta, Penalty{PenaltyKind::ElasticNet, lambda, alpha, {}});
                    consider(std::move(fit), lambda, alpha);
                }
            }
            break;
        }
        case ModelId::AdaptiveLasso: {
            const Eigen::VectorXd ols = solve_normal_equations(gram, 0.0, true, nullptr);
            std::vector<double> w(static_cast<std::size_t>(j));
            for (Eigen::Index i = 0; i < j; ++i) {
                const double mag = std::abs(ols(i));
                w[static_cast<std::size_t>(i)] = mag < 1e-12 ? 1e12 : 1.0 / mag;
            }
            Eigen::VectorXd beta = Eigen::VectorXd::Zero(j);
            for (double lambda : lambdas) {
                coordinate_descent(gram, lambda, 0.0, w, beta, {});
                Penalty p{PenaltyKind::AdaptiveLasso, lambda, 0.0, w};
                LinearFit fit = finalize(fm, gram, beta, std::move(p));
                consider(std::move(fit), lambda, 0.0);
            }
            break;
        }
        case ModelId::PostLasso: {
            Eigen::VectorXd beta = Eigen::VectorXd::Zero(j);
            std::map<std::vector<bool>, LinearFit> cache;
            for (double lambda : lambdas) {
                coordinate_descent(gram, lambda, 0.0, {}, beta, {});
                std::vector<bool> support(static_cast<std::size_t>(j));
                for (Eigen::Index i = 0; i < j; ++i)
                    support[static_cast<std::size_t>(i)] = beta(i) != 0.0;
                auto it = cache.find(support);
                if (it == cache.end()) {
                    LinearFit refit = fit_post_lasso(fm, lambda, train);
                    it = cache.emplace(support, std::move(refit)).first;
                }
                LinearFit fit = it->second;
                fit.penalty.lambda = lambda;
                consider(std::move(fit), lambda, 0.0);
            }
            break;
        }
        default:
            throw ConfigError("tuned_linear_fit: not a tuned linear model");
    }

    best->residual_variance = residual_variance_over(*best, fm, {train, val});
    return {std::move(*best), best_hp};
}

inline std::vector<std::vector<double>> window_rows(const FeatureMatrix& fm, IndexRange rows) {
    return {fm.rows.begin() + static_cast<std::ptrdiff_t>(rows.begin),
            fm.rows.begin() + static_cast<std::ptrdiff_t>(rows.end)};
}

inline std::vector<double> window_targets(const FeatureMatrix& fm, IndexRange rows) {
    return {fm.target.begin() + static_cast<std::ptrdiff_t>(rows.begin),
            fm.target.begin() + static_cast<std::ptrdiff_t>(rows.end)};
}

/// Tuned gradient boosting: each (depth, learning rate) pair is fitted once
/// to the largest stage count with per-stage validation tracking, so the
/// trees dimension costs nothing extra. Ties resolve toward fewer trees,
/// then shallower depth, then the smaller learning rate.
inline std::pair<TreeEnsemble, Hyperparameters> tuned_boosting_fit(const FeatureMatrix& fm,
                                                                   const TuningGrid& grid,
                                                                   IndexRange train,
                                                                   IndexRange val) {
    if (grid.gb_depths.empty() || grid.gb_trees.empty() || grid.gb_learning_rates.empty())
        throw ConfigError("tuned_boosting_fit: empty grid");
    const auto x_train = window_rows(fm, train);
    const auto y_train = window_targets(fm, train);
    const auto x_val = window_rows(fm, val);
    const auto y_val = window_targets(fm, val);
    const int max_trees = *std::max_element(grid.gb_trees.begin(), grid.gb_trees.end());

    struct Candidate {
        double mse;
        int trees;
        int depth;
        double lr;
    };
    std::optional<Candidate> best;
    std::map<std::pair<int, double>, TreeEnsemble> fitted;

    for (int depth : grid.gb_depths) {
        for (double lr : grid.gb_learning_rates) {
            BoostOptions opts;
            opts.trees = max_trees;
            opts.depth = depth;
            opts.learning_rate = lr;
            std::vector<double> val_mse;
            TreeEnsemble full =
                fit_gradient_boosting(x_train, y_train, opts, nullptr, &x_val, &y_val, &val_mse);
            for (int trees : grid.gb_trees) {
                const double mse = val_mse[static_cast<std::size_t>(trees - 1)];
                const Candidate cand{mse, trees, depth, lr};
                const bool better =
                    !best || cand.mse < best->mse ||
                    (cand.mse == best->mse &&
                     std::tie(cand.trees, cand.depth, cand.lr) <
                         std::tie(best->trees, best->depth, best->lr));
                if (better) best = cand;
            }
            fitted.emplace(std::make_pair(depth, lr), std::move(full));
        }
    }
    TreeEnsemble chosen = truncate_boosting(fitted.at({best->depth, best->lr}),
                                            static_cast<std::size_t>(best->trees));
    Hyperparameters hp;
    hp.gb_depth = best->depth;
    hp.gb_trees = best->trees;
    hp.gb_learning_rate = best->lr;
    hp.validation_mse = best->mse;
    return {std::move(chosen), hp};
}

}  // namespace detail

/// Validation-set grid search for a tuned model (the harness calls the
/// underlying fit-returning versions; this surface reports the chosen cell).
inline Hyperparameters tune(ModelId id, const FeatureMatrix& fm, const TuningGrid& grid,
                            std::optional<IndexRange> train_window = {},
                            std::optional<IndexRange> val_window = {}) {
    const IndexRange train = train_window.value_or(fm.split.train);
    const IndexRange val = val_window.value_or(fm.split.validation);
    if (val.size() < 30) throw SizingError("tune: need at least 30 validation rows");
    if (id == ModelId::GradientBoosting)
        return detail::tuned_boosting_fit(fm, grid, train, val).second;
    return detail::tuned_linear_fit(id, fm, grid, train, val).second;
}

// ---------------------------------------------------------------------------
// Forecast production
// ---------------------------------------------------------------------------

struct ForecastCell {
    std::string date;        // first target day
    std::size_t info_day = 0;
    double forecast = 0.0;
    double realized = 0.0;
    bool missing = false;
    std::string error;
};

struct ForecastTable {
    Horizon horizon = Horizon::Day;
    std::vector<std::string> assets;
    std::vector<ModelId> models;
    // cells[asset][model][step over the test range]
    std::vector<std::vector<std::vector<ForecastCell>>> cells;
    std::vector<std::string> errors;   // (asset, model) pairs that failed wholesale

    const std::vector<ForecastCell>& series(std::size_t asset, std::size_t model) const {
        return cells[asset][model];
    }
};

struct ForecastOptions {
    TuningGrid grid;
    NnProfile nn;
    std::uint64_t seed = 1;
    int jobs = 0;
};

namespace detail {

inline NetworkSpec nn_spec(int architecture, const NnProfile& profile, std::uint64_t seed) {
    NetworkSpec spec;
    spec.hidden = pyramid_architecture(architecture);
    spec.max_epochs = profile.max_epochs;
    spec.patience = profile.patience;
    spec.dropout = profile.dropout;
    spec.dropout_is_keep_probability = profile.dropout_is_keep;
    spec.seed = seed;
    return spec;
}

/// The 100-seed ensemble of one (asset, architecture) pair. Its seed depends
/// on the architecture only, never on the selection size, so the best-1 and
/// best-10 models rank the same trained members.
inline std::shared_ptr<const SeedEnsemble> train_nn_ensemble(const AssetData& asset,
                                                             int architecture,
                                                             const FeatureMatrix& fm,
                                                             const ForecastOptions& opts) {
    NetData data;
    data.x_train = window_rows(fm, fm.split.train);
    data.y_train = window_targets(fm, fm.split.train);
    data.x_val = window_rows(fm, fm.split.validation);
    data.y_val = window_targets(fm, fm.split.validation);
    const std::uint64_t seed = Rng(opts.seed)
                                   .stream(asset.asset_id)
                                   .stream("nn" + std::to_string(architecture))
                                   .seed();
    const auto spec = nn_spec(architecture, opts.nn, seed);
    return std::make_shared<const SeedEnsemble>(
        train_seed_ensemble(spec, data, opts.nn.seeds, opts.jobs));
}

/// One (asset, model) forecast series over the test range.
inline std::vector<ForecastCell> forecast_one(const AssetData& asset, ModelId model,
                                              DatasetKind dataset, TargetSpec target,
                                              SplitScheme scheme, const ForecastOptions& opts,
                                              std::shared_ptr<const SeedEnsemble> nn = nullptr) {
    const FeatureMatrix fm = build_features(asset, dataset, model, target, scheme);
    const WindowMode mode = window_mode(model);
    const std::size_t n_train = fm.split.train.size();
    const std::size_t n_val = fm.split.validation.size();
    const bool log_space = model == ModelId::LogHar;
    const Rng pair_rng =
        Rng(opts.seed).stream(asset.asset_id).stream(to_string(model));

    std::vector<ForecastCell> out;
    out.reserve(fm.split.test.size());

    TrainStats fixed_stats{};
    if (mode == WindowMode::Fixed) {
        if (!nn) nn = train_nn_ensemble(asset, neural_architecture(model), fm, opts);
        fixed_stats = target_stats(fm, IndexRange{fm.split.train.begin, fm.split.validation.end});
    }

    TargetTransform base_transform;
    base_transform.mean = fm.target_stats.mean;
    base_transform.std = fm.target_stats.std;
    base_transform.log_space = log_space;

    for (std::size_t r = fm.split.test.begin; r < fm.split.test.end; ++r) {
        ForecastCell cell;
        cell.info_day = fm.day_index[r];
        cell.date = asset.dates[fm.day_index[r] + 1];
        cell.realized = fm.realized[r];
        try {
            double raw = 0.0;
            TrainStats stats{};
            TargetTransform transform = base_transform;
            switch (mode) {
                case WindowMode::RollingMerged: {
                    const IndexRange window{r - n_train - n_val, r};
                    // structural no-leakage guard: the window ends before r
                    if (window.end > r) throw Error("window leaks past the forecast step");
                    stats = target_stats(fm, window);
                    if (model == ModelId::Bagging || model == ModelId::RandomForest) {
                        BaggingOptions bo;
                        bo.trees = model == ModelId::Bagging ? opts.grid.bag_trees
                                                             : opts.grid.rf_trees;
                        bo.min_node_size = opts.grid.min_node_size;
                        const auto x = window_rows(fm, window);
                        const auto y = window_targets(fm, window);
                        const Rng step_rng = pair_rng.stream(r);
                        const TreeEnsemble e =
                            model == ModelId::Bagging
                                ? fit_bagging(x, y, bo, step_rng, 1)
                                : fit_random_forest(x, y, bo, step_rng, 1);
                        raw = transform.to_natural(e.predict(fm.rows[r]));
                    } else {
                        LinearFit fit = fit_ols(fm, window);
                        if (log_space)
                            transform.scaled_residual_variance =
                                residual_variance_over(fit, fm, {window});
                        raw = transform.to_natural(predict_linear(fit, fm.rows[r]));
                    }
                    break;
                }
                case WindowMode::RollingTuned: {
                    const IndexRange train{r - n_train - n_val, r - n_val};
                    const IndexRange val{r - n_val, r};
                    stats = target_stats(fm, IndexRange{train.begin, val.end});
                    if (model == ModelId::GradientBoosting) {
                        auto [ensemble, hp] = tuned_boosting_fit(fm, opts.grid, train, val);
                        raw = transform.to_natural(ensemble.predict(fm.rows[r]));
                    } else {
                        auto [fit, hp] = tuned_linear_fit(model, fm, opts.grid, train, val);
                        raw = transform.to_natural(predict_linear(fit, fm.rows[r]));
                    }
                    break;
                }
                case WindowMode::Fixed: {
                    stats = fixed_stats;
                    raw = transform.to_natural(nn->predict(fm.rows[r], neural_best_k(model)));
                    break;
                }
            }
            cell.forecast = sanitize_forecast(model, raw, stats);
        } catch (const Error& e) {
            cell.missing = true;
            cell.error = e.what();
        }
        out.push_back(std::move(cell));
    }
    return out;
}

}  // namespace detail

/// Produces one forecast per (asset, model, test day). Per-step failures
/// mark the cell missing; a wholesale model failure clears its series and
/// is recorded in `errors`; the run continues either way. Identical inputs
/// and seed yield an identical table regardless of the worker count.
inline ForecastTable run_forecasts(const std::vector<AssetData>& assets,
                                   const std::vector<ModelId>& models, DatasetKind dataset,
                                   TargetSpec target, SplitScheme scheme,
                                   const ForecastOptions& opts) {
    ForecastTable table;
    table.horizon = target.horizon;
    table.models = models;
    for (const auto& a : assets) table.assets.push_back(a.asset_id);
    table.cells.assign(assets.size(), std::vector<std::vector<ForecastCell>>(models.size()));

    // both selection sizes of a neural architecture share one trained
    // ensemble per asset; training parallelizes over seeds, so it runs ahead
    // of the pair-parallel loop below
    std::vector<std::map<int, std::shared_ptr<const SeedEnsemble>>> nn_cache(assets.size());
    std::vector<std::vector<std::string>> pair_errors(assets.size() * models.size());
    for (std::size_t a = 0; a < assets.size(); ++a) {
        for (std::size_t m = 0; m < models.size(); ++m) {
            if (!is_neural(models[m])) continue;
            const int arch = neural_architecture(models[m]);
            if (nn_cache[a].count(arch)) continue;
            try {
                const FeatureMatrix fm =
                    build_features(assets[a], dataset, models[m], target, scheme);
                nn_cache[a].emplace(arch, detail::train_nn_ensemble(assets[a], arch, fm, opts));
            } catch (const Error& e) {
                pair_errors[a * models.size() + m].push_back(
                    assets[a].asset_id + "/" + to_string(models[m]) + ": " + e.what());
            }
        }
    }

    parallel_for(assets.size() * models.size(), opts.jobs, [&](std::size_t pair) {
        const std::size_t a = pair / models.size();
        const std::size_t m = pair % models.size();
        if (!pair_errors[pair].empty()) return;   // ensemble training already failed
        std::shared_ptr<const SeedEnsemble> shared;
        if (is_neural(models[m])) shared = nn_cache[a].at(neural_architecture(models[m]));
        try {
            table.cells[a][m] = detail::forecast_one(assets[a], models[m], dataset, target,
                                                     scheme, opts, shared);
        } catch (const Error& e) {
            table.cells[a][m].clear();
            pair_errors[pair].push_back(assets[a].asset_id + "/" + to_string(models[m]) + ": " +
                                        e.what());
        }
    });
    for (auto& errs : pair_errors)
        for (auto& e : errs) table.errors.push_back(std::move(e));
    return table;
}

/// A model fitted once on the initial window (the fixed-window fit the
/// in-sample diagnostics run on: the ALE curves and the fitted-series acf).
struct InitialFit {
    FeatureMatrix fm;
    std::shared_ptr<const Forecaster> model;
};

inline InitialFit fit_initial_model(const AssetData& asset, ModelId model, DatasetKind dataset,
                                    TargetSpec target, SplitScheme scheme,
                                    const ForecastOptions& opts) {
    InitialFit out;
    out.fm = build_features(asset, dataset, model, target, scheme);
    const FeatureMatrix& fm = out.fm;
    const bool log_space = model == ModelId::LogHar;
    const Rng pair_rng = Rng(opts.seed).stream(asset.asset_id).stream(to_string(model));

    TargetTransform transform;
    transform.mean = fm.target_stats.mean;
    transform.std = fm.target_stats.std;
    transform.log_space = log_space;

    std::shared_ptr<const Forecaster> inner;
    switch (window_mode(model)) {
        case WindowMode::RollingMerged: {
            const IndexRange window{fm.split.train.begin, fm.split.validation.end};
            if (model == ModelId::Bagging || model == ModelId::RandomForest) {
                BaggingOptions bo;
                bo.trees = model == ModelId::Bagging ? opts.grid.bag_trees : opts.grid.rf_trees;
                bo.min_node_size = opts.grid.min_node_size;
                const auto x = detail::window_rows(fm, window);
                const auto y = detail::window_targets(fm, window);
                const TreeEnsemble e = model == ModelId::Bagging
                                           ? fit_bagging(x, y, bo, pair_rng, opts.jobs)
                                           : fit_random_forest(x, y, bo, pair_rng, opts.jobs);
                inner = std::make_shared<EnsembleForecaster>(e);
            } else {
                LinearFit fit = fit_ols(fm, window);
                if (log_space)
                    transform.scaled_residual_variance =
                        residual_variance_over(fit, fm, {window});
                inner = std::make_shared<LinearForecaster>(std::move(fit));
            }
            break;
        }
        case WindowMode::RollingTuned: {
            if (model == ModelId::GradientBoosting) {
                auto [e, hp] =
                    detail::tuned_boosting_fit(fm, opts.grid, fm.split.train, fm.split.validation);
                inner = std::make_shared<EnsembleForecaster>(std::move(e));
            } else {
                auto [fit, hp] = detail::tuned_linear_fit(model, fm, opts.grid, fm.split.train,
                                                          fm.split.validation);
                inner = std::make_shared<LinearForecaster>(std::move(fit));
            }
            break;
        }
        case WindowMode::Fixed: {
            auto ens = detail::train_nn_ensemble(asset, neural_architecture(model), fm, opts);
            inner = std::make_shared<NetworkForecaster>(ens, neural_best_k(model));
            break;
        }
    }
    out.model = std::make_shared<TransformedForecaster>(std::move(inner), transform);
    return out;
}

/// In-sample fitted values on the initial training window, for the
/// persistence diagnostic.
inline std::vector<double> insample_fitted(const AssetData& asset, ModelId model,
                                           DatasetKind dataset, TargetSpec target,
                                           SplitScheme scheme, const ForecastOptions& opts) {
    const InitialFit fit = fit_initial_model(asset, model, dataset, target, scheme, opts);
    std::vector<double> fitted;
    for (std::size_t r = fit.fm.split.train.begin; r < fit.fm.split.train.end; ++r)
        fitted.push_back(fit.model->predict(fit.fm.rows[r]));
    return fitted;
}

}  // namespace volaforge
