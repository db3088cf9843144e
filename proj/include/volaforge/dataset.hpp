#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "volaforge/realized.hpp"
#include "volaforge/timeseries.hpp"

namespace volaforge {

// ---------------------------------------------------------------------------
// Model roster
// ---------------------------------------------------------------------------

enum class ModelId {
    Har,
    HarX,
    LogHar,
    LevHar,
    Shar,
    Harq,
    Ridge,
    Lasso,
    ElasticNet,
    AdaptiveLasso,
    PostLasso,
    Bagging,
    RandomForest,
    GradientBoosting,
    Nn1Best1,
    Nn1Best10,
    Nn2Best1,
    Nn2Best10,
    Nn3Best1,
    Nn3Best10,
    Nn4Best1,
    Nn4Best10,
};

inline const std::vector<std::pair<ModelId, std::string>>& model_roster() {
    static const std::vector<std::pair<ModelId, std::string>> roster = {
        {ModelId::Har, "har"},
        {ModelId::HarX, "har-x"},
        {ModelId::LogHar, "loghar"},
        {ModelId::LevHar, "levhar"},
        {ModelId::Shar, "shar"},
        {ModelId::Harq, "harq"},
        {ModelId::Ridge, "rr"},
        {ModelId::Lasso, "la"},
        {ModelId::ElasticNet, "en"},
        {ModelId::AdaptiveLasso, "a-la"},
        {ModelId::PostLasso, "p-la"},
        {ModelId::Bagging, "bg"},
        {ModelId::RandomForest, "rf"},
        {ModelId::GradientBoosting, "gb"},
        {ModelId::Nn1Best1, "nn1_1"},
        {ModelId::Nn1Best10, "nn1_10"},
        {ModelId::Nn2Best1, "nn2_1"},
        {ModelId::Nn2Best10, "nn2_10"},
        {ModelId::Nn3Best1, "nn3_1"},
        {ModelId::Nn3Best10, "nn3_10"},
        {ModelId::Nn4Best1, "nn4_1"},
        {ModelId::Nn4Best10, "nn4_10"},
    };
    return roster;
}

inline std::string to_string(ModelId id) {
    for (const auto& [m, name] : model_roster())
        if (m == id) return name;
    throw ConfigError("unknown model id");
}

inline std::string model_roster_string() {
    std::string s;
    for (const auto& [m, name] : model_roster()) {
        if (!s.empty()) s += ", ";
        s += name;
    }
    return s;
}

inline ModelId parse_model_id(const std::string& name) {
    for (const auto& [m, n] : model_roster())
        if (n == name) return m;
    throw ConfigError("unknown model '" + name + "'; valid models: " + model_roster_string());
}

inline bool is_neural(ModelId id) { return id >= ModelId::Nn1Best1; }

/// Pyramid index (1..4) of a neural model.
inline int neural_architecture(ModelId id) {
    switch (id) {
        case ModelId::Nn1Best1:
        case ModelId::Nn1Best10: return 1;
        case ModelId::Nn2Best1:
        case ModelId::Nn2Best10: return 2;
        case ModelId::Nn3Best1:
        case ModelId::Nn3Best10: return 3;
        case ModelId::Nn4Best1:
        case ModelId::Nn4Best10: return 4;
        default: throw ConfigError("not a neural model");
    }
}

/// Ensemble selection size: best-1 or the mean of the best 10.
inline int neural_best_k(ModelId id) {
    switch (id) {
        case ModelId::Nn1Best1:
        case ModelId::Nn2Best1:
        case ModelId::Nn3Best1:
        case ModelId::Nn4Best1: return 1;
        case ModelId::Nn1Best10:
        case ModelId::Nn2Best10:
        case ModelId::Nn3Best10:
        case ModelId::Nn4Best10: return 10;
        default: throw ConfigError("not a neural model");
    }
}

// ---------------------------------------------------------------------------
// Datasets, covariates, targets
// ---------------------------------------------------------------------------

enum class DatasetKind { MHar, MAll };

inline DatasetKind parse_dataset(const std::string& s) {
    if (s == "m_har") return DatasetKind::MHar;
    if (s == "m_all") return DatasetKind::MAll;
    throw ConfigError("unknown dataset '" + s + "'; valid: m_har, m_all");
}

/// The nine exogenous covariates, in table order. Transforms applied at
/// build time: us3m is first-differenced, dvol is the first difference of
/// the log, and a log-target model additionally logs iv and vix.
inline const std::array<std::string, 9>& covariate_names() {
    static const std::array<std::string, 9> names = {"iv",  "ea",  "vix", "epu", "us3m",
                                                     "hsi", "m1w", "dvol", "ads"};
    return names;
}

enum class Horizon { Day = 1, Week = 5, Month = 22 };

inline Horizon parse_horizon(const std::string& s) {
    if (s == "day") return Horizon::Day;
    if (s == "week") return Horizon::Week;
    if (s == "month") return Horizon::Month;
    throw ConfigError("unknown horizon '" + s + "'; valid: day, week, month");
}

inline std::string to_string(Horizon h) {
    switch (h) {
        case Horizon::Day: return "day";
        case Horizon::Week: return "week";
        case Horizon::Month: return "month";
    }
    throw ConfigError("bad horizon");
}

struct TargetSpec {
    Horizon horizon = Horizon::Day;
    std::size_t days() const { return static_cast<std::size_t>(horizon); }
};

/// Average realized variance over the h days following information day t.
inline double build_target(std::span<const double> rv, TargetSpec spec, std::size_t t) {
    const std::size_t h = spec.days();
    if (t + h >= rv.size())
        throw SizingError("build_target: window [t+1, t+" + std::to_string(h) +
                          "] exceeds the sample at t=" + std::to_string(t));
    KahanSum s;
    for (std::size_t i = 1; i <= h; ++i) s.add(rv[t + i]);
    return s.value() / static_cast<double>(h);
}

// ---------------------------------------------------------------------------
// Asset bundle and feature building
// ---------------------------------------------------------------------------

struct AssetData {
    std::string asset_id;
    std::vector<std::string> dates;
    std::vector<RealizedDay> realized;
    std::map<std::string, DailySeries> covariates;

    std::size_t days() const { return dates.size(); }

    /// Checks that every covariate series is date-aligned with the realized
    /// panel; reports the offending dates.
    void validate(bool need_covariates) const {
        if (dates.size() != realized.size())
            throw DataError("AssetData " + asset_id + ": dates/realized length mismatch");
        if (need_covariates) {
            for (const auto& name : covariate_names()) {
                const auto it = covariates.find(name);
                if (it == covariates.end())
                    throw DataError("AssetData " + asset_id + ": missing covariate '" + name + "'");
                const auto& series = it->second;
                if (series.dates.size() != dates.size()) {
                    throw DataError("AssetData " + asset_id + ": covariate '" + name + "' has " +
                                    std::to_string(series.dates.size()) + " rows, expected " +
                                    std::to_string(dates.size()));
                }
                for (std::size_t d = 0; d < dates.size(); ++d)
                    if (series.dates[d] != dates[d])
                        throw DataError("AssetData " + asset_id + ": covariate '" + name +
                                        "' misaligned at " + series.dates[d] + " (expected " +
                                        dates[d] + ")");
            }
        }
    }
};

/// Test/demo helper: an asset carrying only a realized-variance series.
inline AssetData asset_from_rv(const DailySeries& rv) {
    AssetData a;
    a.asset_id = rv.asset_id;
    a.dates = rv.dates;
    a.realized.resize(rv.values.size());
    for (std::size_t i = 0; i < rv.values.size(); ++i) {
        a.realized[i].rv = rv.values[i];
        a.realized[i].rv_pos = 0.5 * rv.values[i];
        a.realized[i].rv_neg = 0.5 * rv.values[i];
    }
    return a;
}

namespace detail {

inline double safe_log(double v, const std::string& what) {
    if (!(v > 0.0)) throw DataError("log transform of non-positive value in " + what);
    return std::log(v);
}

}  // namespace detail

/// Assembles the per-model design matrix: base lag columns (model specific)
/// plus, for the extended dataset, the nine transformed covariates. Rows are
/// indexed by information day; the split tags rows train/validation/test.
/// Features are standardized with training-row statistics (the 0/1
/// announcement dummy passes through raw). Rows whose target window runs past
/// the sample are dropped and noted.
inline FeatureMatrix build_features(const AssetData& asset, DatasetKind dataset, ModelId model,
                                    TargetSpec target, SplitScheme scheme,
                                    std::vector<std::string>* notes = nullptr) {
    asset.validate(dataset == DatasetKind::MAll);
    const std::size_t total = asset.days();
    const DataSplit split = make_split(total, scheme);
    const bool log_target = model == ModelId::LogHar;

    std::vector<double> rv(total);
    for (std::size_t i = 0; i < total; ++i) rv[i] = asset.realized[i].rv;

    FeatureMatrix fm;
    fm.split = split;

    // base (lag) columns per model
    switch (model) {
        case ModelId::LogHar:
            fm.column_names = {"log_rvd", "log_rvw", "log_rvm"};
            break;
        case ModelId::LevHar:
            fm.column_names = {"rvd", "rvw", "rvm", "retd_neg", "retw_neg", "retm_neg"};
            break;
        case ModelId::Shar:
            fm.column_names = {"rvd_neg", "rvd_pos", "rvw", "rvm"};
            break;
        case ModelId::Harq:
            fm.column_names = {"rvd", "rqsqrt_rvd", "rvw", "rvm"};
            break;
        default:
            fm.column_names = {"rvd", "rvw", "rvm"};
            break;
    }
    std::optional<std::size_t> ea_column;
    if (dataset == DatasetKind::MAll) {
        for (const auto& name : covariate_names()) {
            std::string column = name;
            if (name == "us3m") column = "us3m_diff";
            if (name == "dvol") column = "dvol_dlog";
            if (log_target && (name == "iv" || name == "vix")) column = name + "_log";
            if (name == "ea") ea_column = fm.column_names.size();
            fm.column_names.push_back(column);
        }
    }

    const std::size_t h = target.days();
    std::size_t dropped = 0;
    for (std::size_t row = 0; row < split.usable_rows(); ++row) {
        const std::size_t target_day = split.burn_in + row;   // first forecast day
        const std::size_t info_day = target_day - 1;
        if (info_day + h >= total) {
            // target window would run past the sample; only test-tail rows
            // can trigger this because burn-in >> h
            ++dropped;
            continue;
        }
        const LagSet lags = build_lags(asset.realized, target_day);

        std::vector<double> x;
        x.reserve(fm.column_names.size());
        switch (model) {
            case ModelId::LogHar:
                x.push_back(detail::safe_log(lags.rvd, "rvd"));
                x.push_back(detail::safe_log(lags.rvw, "rvw"));
                x.push_back(detail::safe_log(lags.rvm, "rvm"));
                break;
            case ModelId::LevHar:
                x.insert(x.end(), {lags.rvd, lags.rvw, lags.rvm, lags.retd_neg, lags.retw_neg,
                                   lags.retm_neg});
                break;
            case ModelId::Shar:
                x.insert(x.end(), {lags.rvd_neg, lags.rvd_pos, lags.rvw, lags.rvm});
                break;
            case ModelId::Harq:
                x.insert(x.end(), {lags.rvd, lags.rq_sqrt * lags.rvd, lags.rvw, lags.rvm});
                break;
            default:
                x.insert(x.end(), {lags.rvd, lags.rvw, lags.rvm});
                break;
        }
        if (dataset == DatasetKind::MAll) {
            for (const auto& name : covariate_names()) {
                const auto& values = asset.covariates.at(name).values;
                double v = values[info_day];
                if (name == "us3m") {
                    v = values[info_day] - values[info_day - 1];
                } else if (name == "dvol") {
                    v = detail::safe_log(values[info_day], "dvol") -
                        detail::safe_log(values[info_day - 1], "dvol");
                } else if (log_target && (name == "iv" || name == "vix")) {
                    v = detail::safe_log(v, name);
                }
                x.push_back(v);
            }
        }

        const double realized_target = build_target(rv, target, info_day);
        fm.rows.push_back(std::move(x));
        fm.realized.push_back(realized_target);
        fm.target.push_back(log_target ? detail::safe_log(realized_target, "target")
                                       : realized_target);
        fm.day_index.push_back(info_day);
    }

    if (dropped > 0) {
        // trim the test range to the rows that actually exist
        fm.split.test.end -= dropped;
        if (notes)
            notes->push_back(asset.asset_id + ": dropped " + std::to_string(dropped) +
                             " tail rows (target window exceeds sample at horizon " +
                             std::to_string(h) + ")");
    }
    if (fm.split.test.size() == 0)
        throw SizingError("build_features: no test rows remain at this horizon");

    std::vector<std::size_t> skip;
    if (ea_column) skip.push_back(*ea_column);
    FeatureMatrix out = standardize(fm, skip);

    // The target is scaled with training statistics as well, so the fixed
    // lambda grid spans "unregularized" through "constant model" at any data
    // scale and the network trains on unit-variance targets. Predictions map
    // back through target_stats; `realized` stays in natural units.
    KahanSum sum;
    for (std::size_t r = out.split.train.begin; r < out.split.train.end; ++r)
        sum.add(out.target[r]);
    const double mean = sum.value() / static_cast<double>(out.split.train.size());
    KahanSum ss;
    for (std::size_t r = out.split.train.begin; r < out.split.train.end; ++r)
        ss.add((out.target[r] - mean) * (out.target[r] - mean));
    const double sd = std::sqrt(ss.value() / static_cast<double>(out.split.train.size()));
    if (sd > 0.0) {
        out.target_stats = {mean, sd, true};
        for (auto& t : out.target) t = (t - mean) / sd;
    }
    return out;
}

/// Feature column count is a pure function of (dataset, model).
inline std::size_t expected_column_count(DatasetKind dataset, ModelId model) {
    std::size_t base = 3;
    if (model == ModelId::LevHar) base = 6;
    if (model == ModelId::Shar || model == ModelId::Harq) base = 4;
    return base + (dataset == DatasetKind::MAll ? covariate_names().size() : 0);
}

}  // namespace volaforge
