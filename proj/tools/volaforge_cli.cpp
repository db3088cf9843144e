// volaforge: synthetic-data volatility forecasting pipeline.
//
// Subcommands: simulate, features, forecast, evaluate, ale, var, run.
// Exit codes: 0 success, 2 configuration/usage error, 1 runtime failure.
// Errors are reported as JSON on stderr.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "volaforge/volaforge.hpp"

using namespace volaforge;

namespace {

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

RunConfig config_from_file(const std::string& path) {
    return parse_run_config(load_json(path));
}

std::vector<ModelId> parse_model_list(const std::string& csv_list) {
    std::vector<ModelId> models;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= csv_list.size(); ++i) {
        if (i == csv_list.size() || csv_list[i] == ',') {
            if (i > start) models.push_back(parse_model_id(csv_list.substr(start, i - start)));
            start = i + 1;
        }
    }
    if (models.empty()) throw ConfigError("empty model list");
    return models;
}

AssetData load_asset(const std::string& intraday_path,
                     const std::vector<std::string>& covariate_args) {
    AssetData a;
    const IntradayPanel panel = csv::read_intraday(intraday_path);
    a.asset_id = panel.asset_id;
    a.dates = panel.dates;
    a.realized = realized_series(panel);
    for (const auto& arg : covariate_args) {
        const auto eq = arg.find('=');
        if (eq == std::string::npos)
            throw ConfigError("covariate argument must be name=path, got '" + arg + "'");
        a.covariates[arg.substr(0, eq)] = csv::read_daily(arg.substr(eq + 1), a.asset_id);
    }
    return a;
}

std::uint64_t effective_seed(std::uint64_t flag_seed) {
    if (const char* env = std::getenv("VOLAFORGE_SEED")) return std::stoull(env);
    return flag_seed;
}

/// forecasts.csv parsed back into a table (for evaluate/var on saved runs).
ForecastTable read_forecast_table(const std::string& path) {
    const auto lines = csv::read_lines(path);
    if (lines.size() < 2) throw DataError("forecasts file has no rows: " + path);
    const auto header = csv::split_line(lines.front());
    const std::vector<std::string> expected = {"asset", "model", "date",
                                               "horizon", "forecast", "realized"};
    if (header != expected)
        throw DataError("unexpected forecasts header in " + path);
    ForecastTable table;
    std::map<std::string, std::size_t> asset_index;
    std::map<std::string, std::size_t> model_index;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = csv::split_line(lines[i]);
        if (f.size() != 6) throw DataError("malformed forecasts row " + std::to_string(i));
        table.horizon = parse_horizon(f[3]);
        if (!asset_index.count(f[0])) {
            asset_index[f[0]] = table.assets.size();
            table.assets.push_back(f[0]);
        }
        if (!model_index.count(f[1])) {
            model_index[f[1]] = table.models.size();
            table.models.push_back(parse_model_id(f[1]));
        }
        const std::size_t a = asset_index[f[0]];
        const std::size_t m = model_index[f[1]];
        if (table.cells.size() <= a) table.cells.resize(a + 1);
        if (table.cells[a].size() <= m) table.cells[a].resize(model_index.size());
        ForecastCell cell;
        cell.date = f[2];
        cell.missing = f[4].empty();
        if (!cell.missing) cell.forecast = csv::parse_double(f[4], path);
        cell.realized = csv::parse_double(f[5], path);
        table.cells[a][m].push_back(std::move(cell));
    }
    for (auto& per_asset : table.cells) per_asset.resize(table.models.size());
    return table;
}

void fill_info_days(ForecastTable& table, const std::vector<AssetData>& assets) {
    for (std::size_t a = 0; a < table.assets.size(); ++a) {
        const AssetData* asset = nullptr;
        for (const auto& cand : assets)
            if (cand.asset_id == table.assets[a]) asset = &cand;
        if (!asset) throw DataError("no asset data for '" + table.assets[a] + "'");
        std::map<std::string, std::size_t> day_of;
        for (std::size_t d = 0; d < asset->dates.size(); ++d) day_of[asset->dates[d]] = d;
        for (auto& series : table.cells[a])
            for (auto& cell : series) {
                const auto it = day_of.find(cell.date);
                if (it == day_of.end() || it->second == 0)
                    throw DataError("forecast date " + cell.date + " not in asset data");
                cell.info_day = it->second - 1;
            }
    }
}

int run_guarded(const std::function<void()>& fn) {
    try {
        fn();
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << nlohmann::json{{"type", "config"}, {"error", e.what()}}.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"type", "runtime"}, {"error", e.what()}}.dump() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"volaforge: realized-variance forecasting toolkit"};
    app.require_subcommand(1);

    // ---- simulate ----
    auto* sim_cmd = app.add_subcommand("simulate", "generate synthetic intraday panels");
    std::string sim_config, sim_out = "sim_out";
    sim_cmd->add_option("--config", sim_config, "run config (JSON) with a simulate section")
        ->required();
    sim_cmd->add_option("--out", sim_out, "output directory");

    // ---- shared single-asset flags ----
    std::string asset_path, dataset_str = "m_har", model_str = "har", horizon_str = "day",
                split_str = "70-10-20", out_path;
    std::vector<std::string> cov_args;

    auto* feat_cmd = app.add_subcommand("features", "export a model's design matrix");
    feat_cmd->add_option("--asset", asset_path, "intraday CSV")->required();
    feat_cmd->add_option("--cov", cov_args, "covariate daily CSV as name=path");
    feat_cmd->add_option("--dataset", dataset_str, "m_har or m_all");
    feat_cmd->add_option("--model", model_str, "model id (decides the extra columns)");
    feat_cmd->add_option("--horizon", horizon_str, "day, week or month");
    feat_cmd->add_option("--split", split_str, "70-10-20, fixed-1000 or fixed-2000");
    feat_cmd->add_option("--out", out_path, "output CSV")->required();
    std::string emit_realized;
    feat_cmd->add_option("--emit-realized", emit_realized, "also write the realized-measure CSV");

    // ---- forecast ----
    auto* fc_cmd = app.add_subcommand("forecast", "out-of-sample forecasts for a model roster");
    std::vector<std::string> fc_assets;
    std::string fc_models = "har", fc_out = "forecasts.csv";
    std::uint64_t fc_seed = 1;
    int fc_jobs = 0;
    int fc_lambda_points = 1000, fc_bag_trees = 500, fc_rf_trees = 500, fc_nn_seeds = 100,
        fc_nn_epochs = 500;
    fc_cmd->add_option("--asset", fc_assets, "intraday CSV (repeatable)")->required();
    fc_cmd->add_option("--cov", cov_args, "covariate daily CSV as name=path (single asset)");
    fc_cmd->add_option("--dataset", dataset_str, "m_har or m_all");
    fc_cmd->add_option("--horizon", horizon_str, "day, week or month");
    fc_cmd->add_option("--models", fc_models, "comma-separated model ids");
    fc_cmd->add_option("--split", split_str, "70-10-20, fixed-1000 or fixed-2000");
    fc_cmd->add_option("--out", fc_out, "forecast CSV path");
    fc_cmd->add_option("--seed", fc_seed, "top-level seed (VOLAFORGE_SEED overrides)");
    fc_cmd->add_option("--jobs", fc_jobs, "worker threads (0 = logical cores)");
    fc_cmd->add_option("--lambda-points", fc_lambda_points, "lambda grid size");
    fc_cmd->add_option("--bag-trees", fc_bag_trees, "bagging ensemble size");
    fc_cmd->add_option("--rf-trees", fc_rf_trees, "random forest ensemble size");
    fc_cmd->add_option("--nn-seeds", fc_nn_seeds, "networks per seed ensemble");
    fc_cmd->add_option("--nn-epochs", fc_nn_epochs, "network epoch cap");

    // ---- evaluate ----
    auto* ev_cmd = app.add_subcommand("evaluate", "relative MSE, DM tests, MCS, deciles");
    std::string ev_forecasts, ev_out = ".", ev_benchmark = "har";
    int ev_mcs_reps = 5000;
    std::uint64_t ev_seed = 1;
    ev_cmd->add_option("--forecasts", ev_forecasts, "forecasts.csv from the forecast stage")
        ->required();
    ev_cmd->add_option("--out-dir", ev_out, "output directory");
    ev_cmd->add_option("--benchmark", ev_benchmark, "benchmark model for decile ratios");
    ev_cmd->add_option("--mcs-reps", ev_mcs_reps, "bootstrap replications");
    ev_cmd->add_option("--seed", ev_seed, "bootstrap seed");

    // ---- ale ----
    auto* ale_cmd = app.add_subcommand("ale", "accumulated local effects and importance");
    std::string ale_out = "ale";
    int ale_bins = 100;
    ale_cmd->add_option("--asset", asset_path, "intraday CSV")->required();
    ale_cmd->add_option("--cov", cov_args, "covariate daily CSV as name=path");
    ale_cmd->add_option("--dataset", dataset_str, "m_har or m_all");
    ale_cmd->add_option("--model", model_str, "model id");
    ale_cmd->add_option("--horizon", horizon_str, "day, week or month");
    ale_cmd->add_option("--split", split_str, "split scheme");
    ale_cmd->add_option("--out-dir", ale_out, "output directory");
    ale_cmd->add_option("--bins", ale_bins, "quantile bins");
    std::uint64_t ale_seed = 1;
    ale_cmd->add_option("--seed", ale_seed, "seed for seeded fits");

    // ---- var ----
    auto* var_cmd = app.add_subcommand("var", "filtered-historical-simulation VaR backtest");
    std::string var_forecasts, var_out = ".";
    std::vector<std::string> var_assets;
    double var_alpha = 0.05;
    var_cmd->add_option("--forecasts", var_forecasts, "forecasts.csv (day horizon)")->required();
    var_cmd->add_option("--asset", var_assets, "intraday CSV per forecast asset")->required();
    var_cmd->add_option("--split", split_str, "split scheme used for the forecasts");
    var_cmd->add_option("--alpha", var_alpha, "VaR tail level");
    var_cmd->add_option("--out-dir", var_out, "output directory");

    // ---- run ----
    auto* run_cmd = app.add_subcommand("run", "full pipeline from a config file");
    std::string run_config_path;
    std::string run_out_override;
    int run_jobs = -1;
    run_cmd->add_option("--config", run_config_path, "run config (JSON)")->required();
    run_cmd->add_option("--out", run_out_override, "override the configured output directory");
    run_cmd->add_option("--jobs", run_jobs, "override worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);   // --help
        std::cerr << nlohmann::json{{"type", "config"}, {"error", e.what()}}.dump() << "\n";
        return 2;
    }

    if (sim_cmd->parsed()) {
        return run_guarded([&] {
            RunConfig cfg = config_from_file(sim_config);
            if (!cfg.simulate) throw ConfigError("config has no simulate section");
            pipeline::simulate_assets(cfg, sim_out);
        });
    }

    if (feat_cmd->parsed()) {
        return run_guarded([&] {
            const AssetData asset = load_asset(asset_path, cov_args);
            if (!emit_realized.empty()) {
                IntradayPanel panel = csv::read_intraday(asset_path);
                write_realized_csv(emit_realized, panel, asset.realized);
            }
            const auto fm = build_features(asset, parse_dataset(dataset_str),
                                           parse_model_id(model_str),
                                           TargetSpec{parse_horizon(horizon_str)},
                                           parse_split_scheme(split_str));
            csv::Writer w(out_path);
            std::vector<std::string> header = {"date", "segment"};
            header.insert(header.end(), fm.column_names.begin(), fm.column_names.end());
            header.push_back("target");
            w.row(header);
            for (std::size_t r = 0; r < fm.n_rows(); ++r) {
                std::vector<std::string> row = {asset.dates[fm.day_index[r]]};
                row.push_back(fm.split.train.contains(r)        ? "train"
                              : fm.split.validation.contains(r) ? "validation"
                                                                : "test");
                for (double v : fm.rows[r]) row.push_back(csv::format_double(v));
                row.push_back(csv::format_double(fm.target[r]));
                w.row(row);
            }
        });
    }

    if (fc_cmd->parsed()) {
        return run_guarded([&] {
            std::vector<AssetData> assets;
            for (const auto& path : fc_assets)
                assets.push_back(load_asset(path, fc_assets.size() == 1
                                                      ? cov_args
                                                      : std::vector<std::string>{}));
            RunConfig cfg;
            cfg.seed = effective_seed(fc_seed);
            cfg.jobs = fc_jobs;
            cfg.dataset = parse_dataset(dataset_str);
            cfg.target.horizon = parse_horizon(horizon_str);
            cfg.scheme = parse_split_scheme(split_str);
            cfg.models = parse_model_list(fc_models);
            cfg.grid.lambda_points = fc_lambda_points;
            cfg.grid.bag_trees = fc_bag_trees;
            cfg.grid.rf_trees = fc_rf_trees;
            cfg.nn.seeds = fc_nn_seeds;
            cfg.nn.max_epochs = fc_nn_epochs;
            const ForecastTable table = run_forecasts(assets, cfg.models, cfg.dataset, cfg.target,
                                                      cfg.scheme, cfg.forecast_options());
            pipeline::write_forecasts_csv(fc_out, cfg, table);
        });
    }

    if (ev_cmd->parsed()) {
        return run_guarded([&] {
            const ForecastTable table = read_forecast_table(ev_forecasts);
            RunConfig cfg;
            cfg.seed = effective_seed(ev_seed);
            cfg.evaluate.mcs_reps = ev_mcs_reps;
            cfg.evaluate.benchmark = ev_benchmark;
            cfg.models = table.models;
            std::filesystem::create_directories(ev_out);
            const auto art = pipeline::evaluate_forecasts(cfg, table);
            pipeline::write_evaluation_csv(ev_out, cfg, table, art);
        });
    }

    if (ale_cmd->parsed()) {
        return run_guarded([&] {
            const AssetData asset = load_asset(asset_path, cov_args);
            RunConfig cfg;
            cfg.seed = effective_seed(ale_seed);
            cfg.dataset = parse_dataset(dataset_str);
            cfg.target.horizon = parse_horizon(horizon_str);
            cfg.scheme = parse_split_scheme(split_str);
            cfg.models = {parse_model_id(model_str)};
            cfg.ale_models = cfg.models;
            cfg.ale_bins = ale_bins;
            cfg.out_dir = ale_out;
            pipeline::write_insample_diagnostics(ale_out, cfg, {asset});
        });
    }

    if (var_cmd->parsed()) {
        return run_guarded([&] {
            ForecastTable table = read_forecast_table(var_forecasts);
            std::vector<AssetData> assets;
            for (const auto& path : var_assets) assets.push_back(load_asset(path, {}));
            fill_info_days(table, assets);
            RunConfig cfg;
            cfg.scheme = parse_split_scheme(split_str);
            cfg.var.alpha = var_alpha;
            cfg.models = table.models;
            std::filesystem::create_directories(var_out);
            const auto art = pipeline::var_backtest(cfg, assets, table);
            pipeline::write_var_csv(var_out, cfg, table, art);
        });
    }

    if (run_cmd->parsed()) {
        return run_guarded([&] {
            RunConfig cfg = config_from_file(run_config_path);
            if (!run_out_override.empty()) cfg.out_dir = run_out_override;
            if (run_jobs >= 0) cfg.jobs = run_jobs;
            run_pipeline(cfg, std::cout);
        });
    }

    return 0;
}
