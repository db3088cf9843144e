#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "volaforge/core.hpp"
#include "volaforge/stats.hpp"

namespace volaforge {

// ---------------------------------------------------------------------------
// MSE and relative-MSE matrices
// ---------------------------------------------------------------------------

inline std::vector<double> squared_errors(std::span<const double> forecasts,
                                          std::span<const double> realized) {
    if (forecasts.size() != realized.size())
        throw DataError("squared_errors: misaligned series");
    std::vector<double> out(forecasts.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double d = realized[i] - forecasts[i];
        out[i] = d * d;
    }
    return out;
}

inline double mse(std::span<const double> losses) {
    if (losses.empty()) throw DataError("mse: empty loss series");
    return stats::mean(losses);
}

/// matrix[i][j] = MSE_j / MSE_i (row model is the benchmark); diagonal 1.
/// A zero-MSE benchmark row is reported as missing (NaN).
inline std::vector<std::vector<double>> relative_mse_matrix(
    const std::vector<std::vector<double>>& losses_per_model) {
    const std::size_t m = losses_per_model.size();
    std::vector<double> model_mse(m);
    for (std::size_t i = 0; i < m; ++i) model_mse[i] = mse(losses_per_model[i]);
    std::vector<std::vector<double>> out(m, std::vector<double>(m, 1.0));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue;
            out[i][j] = model_mse[i] > 0.0 ? model_mse[j] / model_mse[i]
                                           : std::numeric_limits<double>::quiet_NaN();
        }
    return out;
}

// ---------------------------------------------------------------------------
// Diebold-Mariano test
// ---------------------------------------------------------------------------

struct DmResult {
    double statistic = 0.0;
    double p_value = 0.5;   // one-sided: H1 is that the column model is better
    int hac_lags = 0;
    bool degenerate = false;
};

/// Tests equal predictive accuracy of two aligned loss series with the
/// alternative that model j (the second series) has smaller expected loss.
/// The long-run variance uses a Bartlett kernel with h-1 lags.
inline DmResult dm_test(std::span<const double> loss_i, std::span<const double> loss_j,
                        int horizon_days = 1) {
    if (loss_i.size() != loss_j.size()) throw DataError("dm_test: misaligned series");
    const std::size_t n = loss_i.size();
    if (n < 30) throw SizingError("dm_test: need at least 30 observations");
    std::vector<double> d(n);
    for (std::size_t t = 0; t < n; ++t) d[t] = loss_i[t] - loss_j[t];

    DmResult res;
    res.hac_lags = std::max(0, horizon_days - 1);
    const double dbar = stats::mean(d);
    const double lrv = stats::newey_west_lrv(d, res.hac_lags);
    if (lrv <= 0.0) {
        res.degenerate = true;
        if (dbar == 0.0) {
            res.statistic = 0.0;
            res.p_value = 0.5;
        } else {
            res.statistic = dbar > 0.0 ? std::numeric_limits<double>::infinity()
                                       : -std::numeric_limits<double>::infinity();
            res.p_value = dbar > 0.0 ? 0.0 : 1.0;
        }
        return res;
    }
    res.statistic = dbar / std::sqrt(lrv / static_cast<double>(n));
    res.p_value = stats::normal_sf(res.statistic);
    return res;
}

// ---------------------------------------------------------------------------
// Model Confidence Set
// ---------------------------------------------------------------------------

struct McsConfig {
    double level = 0.90;
    int bootstrap_reps = 5000;
    int block_length = 0;   // 0 selects ceil(T^(1/3))
};

struct McsResult {
    std::vector<std::size_t> survivors;           // retained model indices
    std::vector<std::size_t> elimination_order;   // first-eliminated first
    std::vector<double> p_values;                 // MCS p-value per model
    bool degenerate = false;                      // constant loss differentials
};

/// Sequential elimination with the studentized range statistic over loss
/// differentials and a moving-block bootstrap null. The same bootstrap index
/// draws serve every elimination step, so results at two confidence levels
/// are comparable on identical draws.
inline McsResult mcs(const std::vector<std::vector<double>>& losses, const McsConfig& cfg,
                     Rng rng) {
    const std::size_t m = losses.size();
    if (m < 2) throw ConfigError("mcs: need at least two models");
    const std::size_t n = losses.front().size();
    for (const auto& l : losses)
        if (l.size() != n) throw DataError("mcs: misaligned loss series");
    if (n < 2) throw SizingError("mcs: need at least two observations");

    const int block = cfg.block_length > 0
                          ? cfg.block_length
                          : static_cast<int>(std::ceil(std::cbrt(static_cast<double>(n))));
    const int reps = cfg.bootstrap_reps;

    // moving-block bootstrap index draws, shared across models and steps
    std::vector<std::vector<std::size_t>> draws(static_cast<std::size_t>(reps));
    for (auto& idx : draws) {
        idx.reserve(n);
        while (idx.size() < n) {
            const std::size_t start = rng.uniform_index(n - static_cast<std::size_t>(block) + 1);
            for (int k = 0; k < block && idx.size() < n; ++k)
                idx.push_back(start + static_cast<std::size_t>(k));
        }
    }

    // per-model sample means and bootstrap means
    std::vector<double> mean_loss(m);
    std::vector<std::vector<double>> boot_mean(m, std::vector<double>(static_cast<std::size_t>(reps)));
    for (std::size_t i = 0; i < m; ++i) {
        mean_loss[i] = stats::mean(losses[i]);
        for (int b = 0; b < reps; ++b) {
            double s = 0.0;
            for (std::size_t t : draws[static_cast<std::size_t>(b)]) s += losses[i][t];
            boot_mean[i][static_cast<std::size_t>(b)] = s / static_cast<double>(n);
        }
    }

    McsResult res;
    res.p_values.assign(m, 1.0);
    std::vector<std::size_t> active(m);
    for (std::size_t i = 0; i < m; ++i) active[i] = i;

    bool any_variation = false;
    for (std::size_t i = 0; i < m && !any_variation; ++i)
        for (std::size_t t = 0; t < n && !any_variation; ++t)
            if (losses[i][t] != losses[0][t]) any_variation = true;
    if (!any_variation) {
        res.degenerate = true;
        res.survivors = active;
        return res;
    }

    const double alpha = 1.0 - cfg.level;
    double p_running = 0.0;
    while (active.size() >= 2) {
        const std::size_t k = active.size();
        // studentized pairwise statistics on the active set
        double t_range = 0.0;
        std::vector<double> worst(k, -std::numeric_limits<double>::infinity());
        std::vector<std::vector<double>> var(k, std::vector<double>(k, 0.0));
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a + 1; b < k; ++b) {
                const std::size_t i = active[a], j = active[b];
                const double dbar = mean_loss[i] - mean_loss[j];
                double v = 0.0;
                for (int r = 0; r < reps; ++r) {
                    const double db = boot_mean[i][static_cast<std::size_t>(r)] -
                                      boot_mean[j][static_cast<std::size_t>(r)] - dbar;
                    v += db * db;
                }
                v /= static_cast<double>(reps);
                var[a][b] = var[b][a] = v;
                const double t_ab = v > 0.0 ? dbar / std::sqrt(v)
                                            : (dbar == 0.0 ? 0.0
                                                           : std::copysign(
                                                                 std::numeric_limits<double>::infinity(),
                                                                 dbar));
                t_range = std::max(t_range, std::abs(t_ab));
                worst[a] = std::max(worst[a], t_ab);
                worst[b] = std::max(worst[b], -t_ab);
            }

        // bootstrap null distribution of the range statistic
        int exceed = 0;
        for (int r = 0; r < reps; ++r) {
            double stat = 0.0;
            for (std::size_t a = 0; a < k; ++a)
                for (std::size_t b = a + 1; b < k; ++b) {
                    if (var[a][b] <= 0.0) continue;
                    const std::size_t i = active[a], j = active[b];
                    const double centered = boot_mean[i][static_cast<std::size_t>(r)] -
                                            boot_mean[j][static_cast<std::size_t>(r)] -
                                            (mean_loss[i] - mean_loss[j]);
                    stat = std::max(stat, std::abs(centered) / std::sqrt(var[a][b]));
                }
            if (stat >= t_range) ++exceed;
        }
        const double p_step = static_cast<double>(exceed) / static_cast<double>(reps);
        p_running = std::max(p_running, p_step);

        if (p_step >= alpha) {
            for (std::size_t a = 0; a < k; ++a) res.p_values[active[a]] = p_running;
            break;
        }
        // eliminate the model with the largest positive deviation
        std::size_t drop = 0;
        for (std::size_t a = 1; a < k; ++a)
            if (worst[a] > worst[drop]) drop = a;
        res.p_values[active[drop]] = p_running;
        res.elimination_order.push_back(active[drop]);
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
    }
    res.survivors = active;
    return res;
}

// ---------------------------------------------------------------------------
// Decile-conditional relative MSE
// ---------------------------------------------------------------------------

/// Buckets test rows by empirical deciles of the realized target (boundary
/// ties fall into the lower bucket) and returns per-decile MSE of every model
/// relative to the benchmark model.
inline std::vector<std::vector<double>> decile_relative_mse(
    const std::vector<std::vector<double>>& losses_per_model, std::span<const double> realized,
    std::size_t benchmark) {
    const std::size_t n = realized.size();
    if (n < 10) throw SizingError("decile_relative_mse: need at least 10 rows");
    for (const auto& l : losses_per_model)
        if (l.size() != n) throw DataError("decile_relative_mse: misaligned losses");

    std::vector<double> sorted(realized.begin(), realized.end());
    std::sort(sorted.begin(), sorted.end());
    std::array<double, 9> edges{};
    for (std::size_t k = 1; k <= 9; ++k) {
        const auto pos = static_cast<std::size_t>(
            std::ceil(static_cast<double>(k) * static_cast<double>(n) / 10.0));
        edges[k - 1] = sorted[std::min(pos, n) - 1];
    }
    auto bucket_of = [&](double v) {
        for (std::size_t k = 0; k < 9; ++k)
            if (v <= edges[k]) return k;
        return std::size_t{9};
    };

    const std::size_t m = losses_per_model.size();
    std::vector<std::vector<double>> sums(10, std::vector<double>(m, 0.0));
    std::vector<std::size_t> counts(10, 0);
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t b = bucket_of(realized[t]);
        ++counts[b];
        for (std::size_t i = 0; i < m; ++i) sums[b][i] += losses_per_model[i][t];
    }
    std::vector<std::vector<double>> out(10, std::vector<double>(m, 1.0));
    for (std::size_t b = 0; b < 10; ++b) {
        if (counts[b] == 0) {
            for (std::size_t i = 0; i < m; ++i) out[b][i] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        const double bench = sums[b][benchmark];
        for (std::size_t i = 0; i < m; ++i)
            out[b][i] = bench > 0.0 ? sums[b][i] / bench : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

/// Bucket sizes under the same decile rule (for diagnostics/tests).
inline std::vector<std::size_t> decile_counts(std::span<const double> realized) {
    std::vector<std::vector<double>> dummy(1, std::vector<double>(realized.size(), 1.0));
    // reuse the bucketing by computing counts directly
    const std::size_t n = realized.size();
    std::vector<double> sorted(realized.begin(), realized.end());
    std::sort(sorted.begin(), sorted.end());
    std::array<double, 9> edges{};
    for (std::size_t k = 1; k <= 9; ++k) {
        const auto pos = static_cast<std::size_t>(
            std::ceil(static_cast<double>(k) * static_cast<double>(n) / 10.0));
        edges[k - 1] = sorted[std::min(pos, n) - 1];
    }
    std::vector<std::size_t> counts(10, 0);
    for (double v : realized) {
        std::size_t b = 9;
        for (std::size_t k = 0; k < 9; ++k)
            if (v <= edges[k]) {
                b = k;
                break;
            }
        ++counts[b];
    }
    return counts;
}

// ---------------------------------------------------------------------------
// Fitted-series autocorrelation
// ---------------------------------------------------------------------------

struct AcfResult {
    std::vector<double> acf;     // index 0 is lag 0 (= 1 by definition)
    double white_noise_band = 0.0;   // +/- 1.96/sqrt(T)
};

inline AcfResult fitted_acf(std::span<const double> fitted, int max_lag) {
    if (max_lag < 1) throw ConfigError("fitted_acf: max_lag must be >= 1");
    AcfResult res;
    res.acf.push_back(1.0);
    const auto tail = stats::acf(fitted, max_lag);   // throws on constant series
    res.acf.insert(res.acf.end(), tail.begin(), tail.end());
    res.white_noise_band = 1.96 / std::sqrt(static_cast<double>(fitted.size()));
    return res;
}

}  // namespace volaforge
