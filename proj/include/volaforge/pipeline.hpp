#pragma once

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "volaforge/ale.hpp"
#include "volaforge/csv.hpp"
#include "volaforge/dataset.hpp"
#include "volaforge/evaluation.hpp"
#include "volaforge/forecast.hpp"
#include "volaforge/risk.hpp"
#include "volaforge/simulate.hpp"

namespace volaforge {

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct SimulateConfig {
    int assets = 1;
    SimConfig path;   // per-asset seed derives from the run seed and asset index
};

struct AssetFiles {
    std::string id;
    std::string intraday;                          // intraday CSV path
    std::map<std::string, std::string> covariates; // covariate name -> daily CSV path
};

struct EvaluateConfig {
    double mcs_level = 0.90;
    int mcs_reps = 5000;
    int mcs_block = 0;
    std::string benchmark = "har";
    int acf_max_lag = 50;
};

struct VarConfig {
    double alpha = 0.05;
};

struct RunConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    int jobs = 0;
    DatasetKind dataset = DatasetKind::MHar;
    TargetSpec target;
    SplitScheme scheme = SplitScheme::Percent70_10_20;
    std::vector<ModelId> models;
    std::optional<SimulateConfig> simulate;
    std::vector<AssetFiles> asset_files;
    TuningGrid grid;
    NnProfile nn;
    EvaluateConfig evaluate;
    VarConfig var;
    std::vector<ModelId> ale_models;   // defaults to `models`
    int ale_bins = 100;

    ForecastOptions forecast_options() const {
        ForecastOptions o;
        o.grid = grid;
        o.nn = nn;
        o.seed = seed;
        o.jobs = jobs;
        return o;
    }
};

inline SplitScheme parse_split_scheme(const std::string& s) {
    if (s == "70-10-20") return SplitScheme::Percent70_10_20;
    if (s == "fixed-1000") return SplitScheme::FixedTrain1000;
    if (s == "fixed-2000") return SplitScheme::FixedTrain2000;
    throw ConfigError("unknown split scheme '" + s + "'; valid: 70-10-20, fixed-1000, fixed-2000");
}

inline std::string to_string(SplitScheme s) {
    switch (s) {
        case SplitScheme::Percent70_10_20: return "70-10-20";
        case SplitScheme::FixedTrain1000: return "fixed-1000";
        case SplitScheme::FixedTrain2000: return "fixed-2000";
    }
    throw ConfigError("bad split scheme");
}

/// Parses and validates a config, collecting every problem before failing.
inline RunConfig parse_run_config(const nlohmann::json& j) {
    RunConfig cfg;
    std::vector<std::string> errors;
    auto guard = [&](auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            errors.emplace_back(e.what());
        }
    };

    guard([&] { cfg.seed = j.value("seed", std::uint64_t{1}); });
    guard([&] { cfg.out_dir = j.value("out_dir", std::string("out")); });
    guard([&] { cfg.jobs = j.value("jobs", 0); });
    guard([&] { cfg.dataset = parse_dataset(j.value("dataset", std::string("m_har"))); });
    guard([&] { cfg.target.horizon = parse_horizon(j.value("horizon", std::string("day"))); });
    guard([&] { cfg.scheme = parse_split_scheme(j.value("split", std::string("70-10-20"))); });
    guard([&] {
        if (!j.contains("models") || !j.at("models").is_array() || j.at("models").empty())
            throw ConfigError("config needs a non-empty 'models' array");
        for (const auto& m : j.at("models")) cfg.models.push_back(parse_model_id(m.get<std::string>()));
    });
    guard([&] {
        if (j.contains("simulate")) {
            const auto& s = j.at("simulate");
            SimulateConfig sim;
            sim.assets = s.value("assets", 1);
            sim.path.days = s.value("days", std::size_t{820});
            sim.path.n_per_day = s.value("n_per_day", std::size_t{78});
            sim.path.mu = s.value("mu", 0.0);
            if (s.contains("vol")) {
                const auto& v = s.at("vol");
                const std::string type = v.value("type", std::string("sqrt"));
                if (type == "constant") {
                    sim.path.vol_model = ConstantVol{v.value("sigma", 0.01)};
                } else if (type == "sqrt") {
                    sim.path.vol_model =
                        SqrtVol{v.value("kappa", 4.0), v.value("theta", 1e-4), v.value("xi", 0.3)};
                } else {
                    throw ConfigError("unknown vol model '" + type + "'; valid: constant, sqrt");
                }
            }
            if (s.contains("jump")) {
                sim.path.jump.intensity = s.at("jump").value("intensity", 0.0);
                sim.path.jump.size_std = s.at("jump").value("size_std", 0.0);
            }
            if (sim.assets < 1) throw ConfigError("simulate.assets must be >= 1");
            cfg.simulate = sim;
        }
    });
    guard([&] {
        if (j.contains("assets")) {
            for (const auto& a : j.at("assets")) {
                AssetFiles f;
                f.id = a.at("id").get<std::string>();
                f.intraday = a.at("intraday").get<std::string>();
                if (a.contains("covariates"))
                    for (const auto& [name, path] : a.at("covariates").items())
                        f.covariates[name] = path.get<std::string>();
                cfg.asset_files.push_back(std::move(f));
            }
        }
    });
    guard([&] {
        if (!j.contains("simulate") && !j.contains("assets"))
            throw ConfigError("config needs either 'simulate' or 'assets'");
    });
    guard([&] {
        if (j.contains("tuning")) {
            const auto& t = j.at("tuning");
            cfg.grid.lambda_points = t.value("lambda_points", cfg.grid.lambda_points);
            cfg.grid.alpha_points = t.value("alpha_points", cfg.grid.alpha_points);
            cfg.grid.bag_trees = t.value("bag_trees", cfg.grid.bag_trees);
            cfg.grid.rf_trees = t.value("rf_trees", cfg.grid.rf_trees);
            cfg.grid.min_node_size = t.value("min_node_size", cfg.grid.min_node_size);
            if (t.contains("gb_trees"))
                cfg.grid.gb_trees = t.at("gb_trees").get<std::vector<int>>();
            if (t.contains("gb_depths"))
                cfg.grid.gb_depths = t.at("gb_depths").get<std::vector<int>>();
            if (t.contains("gb_learning_rates"))
                cfg.grid.gb_learning_rates = t.at("gb_learning_rates").get<std::vector<double>>();
        }
    });
    guard([&] {
        if (j.contains("nn")) {
            const auto& n = j.at("nn");
            cfg.nn.seeds = n.value("seeds", cfg.nn.seeds);
            cfg.nn.max_epochs = n.value("max_epochs", cfg.nn.max_epochs);
            cfg.nn.patience = n.value("patience", cfg.nn.patience);
            cfg.nn.dropout = n.value("dropout", cfg.nn.dropout);
            cfg.nn.dropout_is_keep = n.value("dropout_is_keep", cfg.nn.dropout_is_keep);
        }
    });
    guard([&] {
        if (j.contains("evaluate")) {
            const auto& e = j.at("evaluate");
            cfg.evaluate.mcs_level = e.value("mcs_level", cfg.evaluate.mcs_level);
            cfg.evaluate.mcs_reps = e.value("mcs_reps", cfg.evaluate.mcs_reps);
            cfg.evaluate.mcs_block = e.value("mcs_block", cfg.evaluate.mcs_block);
            cfg.evaluate.benchmark = e.value("benchmark", cfg.evaluate.benchmark);
            cfg.evaluate.acf_max_lag = e.value("acf_max_lag", cfg.evaluate.acf_max_lag);
        }
    });
    guard([&] {
        if (j.contains("var")) cfg.var.alpha = j.at("var").value("alpha", cfg.var.alpha);
        if (cfg.var.alpha <= 0.0 || cfg.var.alpha >= 1.0)
            throw ConfigError("var.alpha must be in (0,1)");
    });
    guard([&] {
        if (j.contains("ale")) {
            const auto& a = j.at("ale");
            cfg.ale_bins = a.value("bins", 100);
            if (a.contains("models"))
                for (const auto& m : a.at("models"))
                    cfg.ale_models.push_back(parse_model_id(m.get<std::string>()));
        }
        if (cfg.ale_models.empty()) cfg.ale_models = cfg.models;
    });

    // environment override of the seed
    if (const char* env = std::getenv("VOLAFORGE_SEED")) {
        try {
            cfg.seed = std::stoull(env);
        } catch (...) {
            errors.emplace_back("VOLAFORGE_SEED is not a number: " + std::string(env));
        }
    }

    if (!errors.empty()) {
        std::string all = "invalid config:";
        for (const auto& e : errors) all += "\n  - " + e;
        throw ConfigError(all);
    }
    return cfg;
}

/// Canonical form of the semantically meaningful fields (everything except
/// output location and worker count). The config hash keys every artifact.
inline nlohmann::json canonical_config(const RunConfig& cfg) {
    nlohmann::json j;
    j["seed"] = cfg.seed;
    j["dataset"] = cfg.dataset == DatasetKind::MHar ? "m_har" : "m_all";
    j["horizon"] = to_string(cfg.target.horizon);
    j["split"] = to_string(cfg.scheme);
    for (const auto& m : cfg.models) j["models"].push_back(to_string(m));
    if (cfg.simulate) {
        nlohmann::json s;
        s["assets"] = cfg.simulate->assets;
        s["days"] = cfg.simulate->path.days;
        s["n_per_day"] = cfg.simulate->path.n_per_day;
        s["mu"] = cfg.simulate->path.mu;
        if (const auto* cv = std::get_if<ConstantVol>(&cfg.simulate->path.vol_model)) {
            s["vol"] = {{"type", "constant"}, {"sigma", cv->sigma}};
        } else {
            const auto& sv = std::get<SqrtVol>(cfg.simulate->path.vol_model);
            s["vol"] = {{"type", "sqrt"}, {"kappa", sv.kappa}, {"theta", sv.theta}, {"xi", sv.xi}};
        }
        s["jump"] = {{"intensity", cfg.simulate->path.jump.intensity},
                     {"size_std", cfg.simulate->path.jump.size_std}};
        j["simulate"] = s;
    }
    for (const auto& a : cfg.asset_files) {
        nlohmann::json f{{"id", a.id}, {"intraday", a.intraday}};
        for (const auto& [name, path] : a.covariates) f["covariates"][name] = path;
        j["assets"].push_back(f);
    }
    j["tuning"] = {{"lambda_points", cfg.grid.lambda_points},
                   {"alpha_points", cfg.grid.alpha_points},
                   {"bag_trees", cfg.grid.bag_trees},
                   {"rf_trees", cfg.grid.rf_trees},
                   {"min_node_size", cfg.grid.min_node_size},
                   {"gb_trees", cfg.grid.gb_trees},
                   {"gb_depths", cfg.grid.gb_depths},
                   {"gb_learning_rates", cfg.grid.gb_learning_rates}};
    j["nn"] = {{"seeds", cfg.nn.seeds},
               {"max_epochs", cfg.nn.max_epochs},
               {"patience", cfg.nn.patience},
               {"dropout", cfg.nn.dropout},
               {"dropout_is_keep", cfg.nn.dropout_is_keep}};
    j["evaluate"] = {{"mcs_level", cfg.evaluate.mcs_level},
                     {"mcs_reps", cfg.evaluate.mcs_reps},
                     {"mcs_block", cfg.evaluate.mcs_block},
                     {"benchmark", cfg.evaluate.benchmark},
                     {"acf_max_lag", cfg.evaluate.acf_max_lag}};
    j["var"] = {{"alpha", cfg.var.alpha}};
    for (const auto& m : cfg.ale_models) j["ale_models"].push_back(to_string(m));
    j["ale_bins"] = cfg.ale_bins;
    return j;
}

inline std::string config_hash(const RunConfig& cfg) {
    const std::uint64_t h = detail::fnv1a(canonical_config(cfg).dump());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

namespace pipeline {

inline std::string stamp(const RunConfig& cfg) {
    return "config_hash=" + config_hash(cfg) + " seed=" + std::to_string(cfg.seed);
}

/// Simulated assets (also writes the intraday panels and the true-QV file
/// when out_dir is non-empty).
inline std::vector<AssetData> simulate_assets(const RunConfig& cfg, const std::string& out_dir) {
    const auto& sim = *cfg.simulate;
    std::vector<AssetData> assets;
    std::vector<SimResult> results;
    for (int a = 0; a < sim.assets; ++a) {
        SimConfig per_asset = sim.path;
        per_asset.seed = Rng(cfg.seed).stream("sim").stream(static_cast<std::uint64_t>(a)).seed();
        SimResult r = simulate_paths(per_asset);
        r.panel.asset_id = "asset" + std::to_string(a);
        AssetData data;
        data.asset_id = r.panel.asset_id;
        data.dates = r.panel.dates;
        data.realized = realized_series(r.panel);
        assets.push_back(std::move(data));
        results.push_back(std::move(r));
    }
    if (!out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        for (const auto& r : results) {
            csv::Writer w(out_dir + "/" + r.panel.asset_id + ".csv");
            w.comment(stamp(cfg));
            std::vector<std::string> header = {"date"};
            for (std::size_t i = 1; i <= r.panel.returns_per_day(); ++i)
                header.push_back("r" + std::to_string(i));
            w.row(header);
            for (std::size_t d = 0; d < r.panel.days(); ++d) {
                std::vector<std::string> row = {r.panel.dates[d]};
                for (double v : r.panel.returns[d]) row.push_back(csv::format_double(v));
                w.row(row);
            }
        }
        csv::Writer truth(out_dir + "/truth.csv");
        truth.comment(stamp(cfg));
        truth.row({"asset", "date", "qv"});
        for (const auto& r : results)
            for (std::size_t d = 0; d < r.panel.days(); ++d)
                truth.row({r.panel.asset_id, r.panel.dates[d], csv::format_double(r.true_qv[d])});
        for (std::size_t a = 0; a < assets.size(); ++a)
            write_realized_csv(out_dir + "/" + assets[a].asset_id + "_realized.csv",
                               results[a].panel, assets[a].realized, stamp(cfg));
    }
    return assets;
}

inline std::vector<AssetData> load_assets(const RunConfig& cfg) {
    std::vector<AssetData> assets;
    for (const auto& f : cfg.asset_files) {
        AssetData a;
        a.asset_id = f.id;
        const IntradayPanel panel = csv::read_intraday(f.intraday, f.id);
        a.dates = panel.dates;
        a.realized = realized_series(panel);
        for (const auto& [name, path] : f.covariates)
            a.covariates[name] = csv::read_daily(path, f.id);
        assets.push_back(std::move(a));
    }
    return assets;
}

inline std::vector<AssetData> acquire_assets(const RunConfig& cfg, const std::string& data_dir) {
    if (cfg.simulate) return simulate_assets(cfg, data_dir);
    return load_assets(cfg);
}

inline void write_forecasts_csv(const std::string& path, const RunConfig& cfg,
                                const ForecastTable& table) {
    csv::Writer w(path);
    w.comment(stamp(cfg));
    w.row({"asset", "model", "date", "horizon", "forecast", "realized"});
    for (std::size_t a = 0; a < table.assets.size(); ++a)
        for (std::size_t m = 0; m < table.models.size(); ++m)
            for (const auto& cell : table.cells[a][m]) {
                w.row({table.assets[a], to_string(table.models[m]), cell.date,
                       to_string(table.horizon),
                       cell.missing ? "" : csv::format_double(cell.forecast),
                       csv::format_double(cell.realized)});
            }
}

/// Squared-error loss series per model for one asset, restricted to steps
/// where every model produced a forecast.
inline std::vector<std::vector<double>> aligned_losses(const ForecastTable& table,
                                                       std::size_t asset) {
    const std::size_t m = table.models.size();
    const std::size_t steps = table.cells[asset].empty() ? 0 : table.cells[asset][0].size();
    std::vector<std::vector<double>> losses(m);
    for (std::size_t t = 0; t < steps; ++t) {
        bool all_present = true;
        for (std::size_t i = 0; i < m; ++i)
            if (t >= table.cells[asset][i].size() || table.cells[asset][i][t].missing)
                all_present = false;
        if (!all_present) continue;
        for (std::size_t i = 0; i < m; ++i) {
            const auto& cell = table.cells[asset][i][t];
            const double e = cell.realized - cell.forecast;
            losses[i].push_back(e * e);
        }
    }
    return losses;
}

struct EvaluationArtifacts {
    std::vector<std::vector<double>> avg_relative_mse;               // [row][col]
    std::vector<std::vector<std::array<double, 3>>> dm_rejections;   // fractions at 10/5/1%
    std::vector<double> mcs_inclusion;                               // per model
    std::vector<std::vector<double>> decile_ratios;                  // [decile][model]
};

inline EvaluationArtifacts evaluate_forecasts(const RunConfig& cfg, const ForecastTable& table) {
    const std::size_t m = table.models.size();
    const std::size_t n_assets = table.assets.size();
    EvaluationArtifacts art;
    art.avg_relative_mse.assign(m, std::vector<double>(m, 0.0));
    art.dm_rejections.assign(m, std::vector<std::array<double, 3>>(m, {0.0, 0.0, 0.0}));
    art.mcs_inclusion.assign(m, 0.0);

    std::size_t bench = 0;
    for (std::size_t i = 0; i < m; ++i)
        if (to_string(table.models[i]) == cfg.evaluate.benchmark) bench = i;

    std::vector<std::vector<double>> decile_sum;
    std::size_t decile_assets = 0;
    const int h = static_cast<int>(table.horizon);

    for (std::size_t a = 0; a < n_assets; ++a) {
        const auto losses = aligned_losses(table, a);
        if (losses.front().size() < 30) throw SizingError("evaluate: too few aligned test rows");
        const auto ratio = relative_mse_matrix(losses);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j2 = 0; j2 < m; ++j2) art.avg_relative_mse[i][j2] += ratio[i][j2];
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j2 = 0; j2 < m; ++j2) {
                if (i == j2) continue;
                const DmResult dm = dm_test(losses[i], losses[j2], h);
                if (dm.p_value < 0.10) art.dm_rejections[i][j2][0] += 1.0;
                if (dm.p_value < 0.05) art.dm_rejections[i][j2][1] += 1.0;
                if (dm.p_value < 0.01) art.dm_rejections[i][j2][2] += 1.0;
            }
        McsConfig mcs_cfg;
        mcs_cfg.level = cfg.evaluate.mcs_level;
        mcs_cfg.bootstrap_reps = cfg.evaluate.mcs_reps;
        mcs_cfg.block_length = cfg.evaluate.mcs_block;
        const auto mcs_res =
            mcs(losses, mcs_cfg, Rng(cfg.seed).stream("mcs").stream(table.assets[a]));
        for (std::size_t s : mcs_res.survivors) art.mcs_inclusion[s] += 1.0;

        // decile-conditional relative MSE on this asset's realized targets
        std::vector<double> realized;
        for (std::size_t t = 0; t < table.cells[a][0].size(); ++t) {
            bool all_present = true;
            for (std::size_t i = 0; i < m; ++i)
                if (table.cells[a][i][t].missing) all_present = false;
            if (all_present) realized.push_back(table.cells[a][0][t].realized);
        }
        if (realized.size() >= 10) {
            const auto deciles = decile_relative_mse(losses, realized, bench);
            if (decile_sum.empty()) decile_sum.assign(10, std::vector<double>(m, 0.0));
            for (std::size_t d = 0; d < 10; ++d)
                for (std::size_t i = 0; i < m; ++i) decile_sum[d][i] += deciles[d][i];
            ++decile_assets;
        }
    }
    const auto denom = static_cast<double>(n_assets);
    for (std::size_t i = 0; i < m; ++i) {
        art.mcs_inclusion[i] /= denom;
        for (std::size_t j2 = 0; j2 < m; ++j2) {
            art.avg_relative_mse[i][j2] /= denom;
            for (auto& r : art.dm_rejections[i][j2]) r /= denom;
        }
    }
    if (decile_assets > 0) {
        art.decile_ratios.assign(10, std::vector<double>(m, 0.0));
        for (std::size_t d = 0; d < 10; ++d)
            for (std::size_t i = 0; i < m; ++i)
                art.decile_ratios[d][i] = decile_sum[d][i] / static_cast<double>(decile_assets);
    }
    return art;
}

/// The published tables mark a pair when the DM test rejects for more than
/// half of the assets; the strictest such level is reported as 10/5/1
/// (empty when no level reaches a majority).
inline std::string dm_majority(const std::array<double, 3>& rejections) {
    if (rejections[2] > 0.5) return "1";
    if (rejections[1] > 0.5) return "5";
    if (rejections[0] > 0.5) return "10";
    return "";
}

inline void write_evaluation_csv(const std::string& out_dir, const RunConfig& cfg,
                                 const ForecastTable& table, const EvaluationArtifacts& art) {
    const std::size_t m = table.models.size();
    {
        csv::Writer w(out_dir + "/relmse.csv");
        w.comment(stamp(cfg));
        w.row({"row_model", "col_model", "avg_relative_mse", "dm_rej_10", "dm_rej_5", "dm_rej_1",
               "dm_majority"});
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                w.row({to_string(table.models[i]), to_string(table.models[j]),
                       csv::format_double(art.avg_relative_mse[i][j]),
                       csv::format_double(art.dm_rejections[i][j][0]),
                       csv::format_double(art.dm_rejections[i][j][1]),
                       csv::format_double(art.dm_rejections[i][j][2]),
                       dm_majority(art.dm_rejections[i][j])});
    }
    {
        csv::Writer w(out_dir + "/mcs.csv");
        w.comment(stamp(cfg));
        w.row({"model", "inclusion_rate"});
        for (std::size_t i = 0; i < m; ++i)
            w.row({to_string(table.models[i]), csv::format_double(art.mcs_inclusion[i])});
    }
    if (!art.decile_ratios.empty()) {
        csv::Writer w(out_dir + "/decile.csv");
        w.comment(stamp(cfg));
        w.row({"decile_low", "decile_high", "model", "relative_mse"});
        for (std::size_t d = 0; d < 10; ++d)
            for (std::size_t i = 0; i < m; ++i)
                w.row({csv::format_double(0.1 * static_cast<double>(d)),
                       csv::format_double(0.1 * static_cast<double>(d + 1)),
                       to_string(table.models[i]), csv::format_double(art.decile_ratios[d][i])});
    }
}

/// Coefficient report for the plain and extended benchmark regressions on
/// the initial training window: estimates with White-robust t-statistics,
/// one row per coefficient (intercept first).
inline void write_har_report(const std::string& path, const RunConfig& cfg,
                             const std::vector<AssetData>& assets) {
    std::vector<ModelId> wanted;
    for (ModelId m : cfg.models)
        if (m == ModelId::Har || m == ModelId::HarX) wanted.push_back(m);
    if (wanted.empty()) return;
    csv::Writer w(path);
    w.comment(stamp(cfg));
    w.row({"asset", "model", "coefficient", "estimate", "t_white"});
    for (const auto& asset : assets) {
        for (ModelId model : wanted) {
            const FeatureMatrix fm =
                build_features(asset, cfg.dataset, model, cfg.target, cfg.scheme);
            const LinearFit fit = fit_ols(fm);
            const auto t = white_tstats(fm, fit);
            w.row({asset.asset_id, to_string(model), "intercept",
                   csv::format_double(fit.intercept), csv::format_double(t[0])});
            for (std::size_t j = 0; j < fm.n_cols(); ++j)
                w.row({asset.asset_id, to_string(model), fm.column_names[j],
                       csv::format_double(fit.weights[j]), csv::format_double(t[j + 1])});
        }
    }
}

/// In-sample diagnostics off one initial fit per (asset, model): the
/// fitted-series acf for every requested model, and ALE curves plus the
/// normalized variable importance for the ale model list.
inline void write_insample_diagnostics(const std::string& out_dir, const RunConfig& cfg,
                                       const std::vector<AssetData>& assets) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir + "/ale");
    const auto opts = cfg.forecast_options();

    csv::Writer acf_writer(out_dir + "/acf.csv");
    acf_writer.comment(stamp(cfg));
    acf_writer.row({"asset", "model", "lag", "acf", "white_noise_band"});
    csv::Writer vi_writer(out_dir + "/ale/vi.csv");
    vi_writer.comment(stamp(cfg));
    vi_writer.row({"asset", "model", "feature", "importance", "vi"});

    std::set<ModelId> ale_set(cfg.ale_models.begin(), cfg.ale_models.end());
    std::set<ModelId> all(cfg.models.begin(), cfg.models.end());
    all.insert(ale_set.begin(), ale_set.end());

    for (const auto& asset : assets) {
        for (ModelId model : all) {
            const InitialFit fit =
                fit_initial_model(asset, model, cfg.dataset, cfg.target, cfg.scheme, opts);

            std::vector<double> fitted;
            for (std::size_t r = fit.fm.split.train.begin; r < fit.fm.split.train.end; ++r)
                fitted.push_back(fit.model->predict(fit.fm.rows[r]));
            try {
                const AcfResult acf = fitted_acf(fitted, cfg.evaluate.acf_max_lag);
                for (std::size_t lag = 0; lag < acf.acf.size(); ++lag)
                    acf_writer.row({asset.asset_id, to_string(model), std::to_string(lag),
                                    csv::format_double(acf.acf[lag]),
                                    csv::format_double(acf.white_noise_band)});
            } catch (const NumericError&) {
                // constant fitted series: acf undefined, skipped
            }

            if (!ale_set.count(model)) continue;
            const auto train_rows = detail::window_rows(fit.fm, fit.fm.split.train);
            std::vector<AleCurve> curves(fit.fm.n_cols());
            parallel_for(fit.fm.n_cols(), cfg.jobs, [&](std::size_t j) {
                curves[j] = ale_estimate(*fit.model, train_rows, j, cfg.ale_bins);
                curves[j].feature = fit.fm.column_names[j];
            });
            const ViScore vi = variable_importance(curves, train_rows);
            for (std::size_t j = 0; j < curves.size(); ++j) {
                vi_writer.row({asset.asset_id, to_string(model), curves[j].feature,
                               csv::format_double(vi.importance[j]),
                               csv::format_double(vi.vi[j])});
                csv::Writer w(out_dir + "/ale/" + asset.asset_id + "__" + to_string(model) +
                              "__" + curves[j].feature + ".csv");
                w.comment(stamp(cfg));
                w.row({"feature", "z", "ale"});
                for (std::size_t e = 0; e < curves[j].edges.size(); ++e) {
                    const double z = curves[j].edges[e];
                    if (z < -1.0 || z > 1.0) continue;   // display window in std units
                    w.row({curves[j].feature, csv::format_double(z),
                           csv::format_double(curves[j].centered[e])});
                }
            }
        }
    }
}

struct VarArtifacts {
    std::vector<std::vector<double>> avg_relative_qloss;
    std::vector<std::vector<std::array<double, 3>>> dm_rejections;
    std::vector<double> exceedance_rate;   // cross-sectional mean per model
    std::vector<int> unc_rejections;       // 5%-level rejections across assets
    std::vector<int> cond_rejections;
};

/// Value-at-Risk backtest: each model's variance forecast scales the
/// empirical quantile of devolatized returns over the trailing in-sample
/// window; the hit sequences feed the coverage tests.
inline VarArtifacts var_backtest(const RunConfig& cfg, const std::vector<AssetData>& assets,
                                 const ForecastTable& table) {
    if (table.horizon != Horizon::Day)
        throw ConfigError("var stage requires the day horizon");
    const double alpha = cfg.var.alpha;
    const std::size_t m = table.models.size();
    VarArtifacts art;
    art.avg_relative_qloss.assign(m, std::vector<double>(m, 0.0));
    art.dm_rejections.assign(m, std::vector<std::array<double, 3>>(m, {0.0, 0.0, 0.0}));
    art.exceedance_rate.assign(m, 0.0);
    art.unc_rejections.assign(m, 0);
    art.cond_rejections.assign(m, 0);

    for (std::size_t a = 0; a < assets.size(); ++a) {
        const auto& asset = assets[a];
        const std::size_t steps = table.cells[a][0].size();
        // residual window length = train + validation rows
        const DataSplit split = make_split(asset.days(), cfg.scheme);
        const std::size_t window = split.train.size() + split.validation.size();

        std::vector<std::vector<double>> qloss(m);
        std::vector<std::vector<int>> hits(m);

        for (std::size_t t = 0; t < steps; ++t) {
            bool all_present = true;
            for (std::size_t i = 0; i < m; ++i)
                if (table.cells[a][i][t].missing) all_present = false;
            if (!all_present) continue;
            const std::size_t info_day = table.cells[a][0][t].info_day;
            // devolatized in-sample returns over the trailing window
            std::vector<double> residuals;
            residuals.reserve(window);
            for (std::size_t d = info_day + 1 - window; d <= info_day; ++d) {
                const double rv = asset.realized[d].rv;
                if (rv > 0.0) residuals.push_back(asset.realized[d].ret_oc / std::sqrt(rv));
            }
            const double next_ret = asset.realized[info_day + 1].ret_oc;
            for (std::size_t i = 0; i < m; ++i) {
                const double var = fhs_var(table.cells[a][i][t].forecast, residuals, alpha);
                hits[i].push_back(next_ret < var ? 1 : 0);
                const double d_ind = next_ret < var ? 1.0 : 0.0;
                qloss[i].push_back((alpha - d_ind) * (next_ret - var));
            }
        }

        const auto ratio = relative_mse_matrix(qloss);   // same ratio mechanics, qloss units
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) art.avg_relative_qloss[i][j] += ratio[i][j];
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                if (i == j) continue;
                const DmResult dm = dm_test(qloss[i], qloss[j], 1);
                if (dm.p_value < 0.10) art.dm_rejections[i][j][0] += 1.0;
                if (dm.p_value < 0.05) art.dm_rejections[i][j][1] += 1.0;
                if (dm.p_value < 0.01) art.dm_rejections[i][j][2] += 1.0;
            }
        for (std::size_t i = 0; i < m; ++i) {
            const CoverageReport rep = coverage_tests(hits[i], alpha);
            art.exceedance_rate[i] += rep.exceedance_rate;
            if (rep.kupiec_p < 0.05) ++art.unc_rejections[i];
            if (rep.conditional_p < 0.05) ++art.cond_rejections[i];
        }
    }
    const auto denom = static_cast<double>(assets.size());
    for (std::size_t i = 0; i < m; ++i) {
        art.exceedance_rate[i] /= denom;
        for (std::size_t j = 0; j < m; ++j) {
            art.avg_relative_qloss[i][j] /= denom;
            for (auto& r : art.dm_rejections[i][j]) r /= denom;
        }
    }
    return art;
}

inline void write_var_csv(const std::string& out_dir, const RunConfig& cfg,
                          const ForecastTable& table, const VarArtifacts& art) {
    const std::size_t m = table.models.size();
    {
        csv::Writer w(out_dir + "/var.csv");
        w.comment(stamp(cfg));
        w.row({"row_model", "col_model", "avg_relative_qloss", "dm_rej_10", "dm_rej_5",
               "dm_rej_1", "dm_majority"});
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                w.row({to_string(table.models[i]), to_string(table.models[j]),
                       csv::format_double(art.avg_relative_qloss[i][j]),
                       csv::format_double(art.dm_rejections[i][j][0]),
                       csv::format_double(art.dm_rejections[i][j][1]),
                       csv::format_double(art.dm_rejections[i][j][2]),
                       dm_majority(art.dm_rejections[i][j])});
    }
    {
        csv::Writer w(out_dir + "/var_coverage.csv");
        w.comment(stamp(cfg));
        w.row({"model", "prb", "unc_rejections", "cond_rejections"});
        for (std::size_t i = 0; i < m; ++i)
            w.row({to_string(table.models[i]), csv::format_double(art.exceedance_rate[i]),
                   std::to_string(art.unc_rejections[i]),
                   std::to_string(art.cond_rejections[i])});
    }
}

}  // namespace pipeline

/// The full pipeline: simulate/load, forecast, evaluate, explain, backtest.
/// Every artifact lands under cfg.out_dir and carries the config hash.
inline void run_pipeline(const RunConfig& cfg, std::ostream& log) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);

    log << "[volaforge] acquiring data\n";
    const auto assets = pipeline::acquire_assets(cfg, cfg.out_dir + "/data");

    log << "[volaforge] producing forecasts (" << cfg.models.size() << " models, "
        << assets.size() << " assets)\n";
    const ForecastTable table = run_forecasts(assets, cfg.models, cfg.dataset, cfg.target,
                                              cfg.scheme, cfg.forecast_options());
    pipeline::write_forecasts_csv(cfg.out_dir + "/forecasts.csv", cfg, table);

    log << "[volaforge] evaluating\n";
    const auto eval = pipeline::evaluate_forecasts(cfg, table);
    pipeline::write_evaluation_csv(cfg.out_dir, cfg, table, eval);

    log << "[volaforge] in-sample diagnostics (acf, accumulated local effects)\n";
    pipeline::write_insample_diagnostics(cfg.out_dir, cfg, assets);
    pipeline::write_har_report(cfg.out_dir + "/har_report.csv", cfg, assets);

    if (cfg.target.horizon == Horizon::Day) {
        log << "[volaforge] value-at-risk backtest\n";
        const auto var_art = pipeline::var_backtest(cfg, assets, table);
        pipeline::write_var_csv(cfg.out_dir, cfg, table, var_art);
    }
    log << "[volaforge] done: " << cfg.out_dir << "\n";
}

}  // namespace volaforge
