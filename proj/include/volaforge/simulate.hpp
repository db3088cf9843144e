#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "volaforge/core.hpp"
#include "volaforge/realized.hpp"
#include "volaforge/timeseries.hpp"

namespace volaforge {

// ---------------------------------------------------------------------------
// Jump-diffusion path simulation
// ---------------------------------------------------------------------------

struct ConstantVol {
    double sigma = 0.01;   // per sqrt(day)
};

/// Mean-reverting square-root variance: dv = kappa (theta - v) dt + xi sqrt(v) dW.
/// Discretized with full truncation, so negative excursions never feed back.
struct SqrtVol {
    double kappa = 4.0;
    double theta = 1e-4;   // stationary variance level (per day)
    double xi = 0.3;
};

struct JumpConfig {
    double intensity = 0.0;   // expected jumps per day
    double size_std = 0.0;    // Gaussian jump-size std (decimal log-return)
};

struct SimConfig {
    std::size_t days = 250;
    std::size_t n_per_day = 78;
    double mu = 0.0;                                  // drift per day
    std::variant<ConstantVol, SqrtVol> vol_model = ConstantVol{};
    JumpConfig jump;
    std::uint64_t seed = 1;

    void validate() const {
        if (days < 1) throw ConfigError("SimConfig: days must be >= 1");
        if (n_per_day < 2) throw ConfigError("SimConfig: n_per_day must be >= 2");
        if (jump.intensity < 0.0 || jump.size_std < 0.0)
            throw ConfigError("SimConfig: jump parameters must be nonnegative");
        if (const auto* cv = std::get_if<ConstantVol>(&vol_model)) {
            if (cv->sigma < 0.0) throw ConfigError("SimConfig: sigma must be nonnegative");
        } else {
            const auto& sv = std::get<SqrtVol>(vol_model);
            if (sv.kappa < 0.0 || sv.theta < 0.0 || sv.xi < 0.0)
                throw ConfigError("SimConfig: square-root variance parameters must be nonnegative");
        }
    }
};

struct SimResult {
    IntradayPanel panel;
    std::vector<double> true_qv;   // per day: sum of spot variance * dt plus squared jumps
};

namespace detail {

/// Jump count over one step by Poisson inversion (product of uniforms).
inline int poisson_count(Rng& rng, double lambda) {
    if (lambda <= 0.0) return 0;
    const double limit = std::exp(-lambda);
    int k = 0;
    double p = 1.0;
    for (;;) {
        p *= rng.u01();
        if (p <= limit) return k;
        ++k;
    }
}

inline std::string synthetic_date(std::size_t day) {
    // Synthetic ISO labels; alignment only requires a strictly increasing order.
    const unsigned year = static_cast<unsigned>(2000 + day / 372) % 10000u;
    const unsigned month = static_cast<unsigned>(1 + (day % 372) / 31);
    const unsigned dom = static_cast<unsigned>(1 + (day % 372) % 31);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04u-%02u-%02u", year, month, dom);
    return buf;
}

}  // namespace detail

/// Euler discretization of the jump-diffusion on the intraday grid. Returns
/// the log-return panel plus the exact discretized quadratic variation per
/// day, reproducible from the seed.
inline SimResult simulate_paths(const SimConfig& cfg) {
    cfg.validate();
    Rng diffusion = Rng(cfg.seed).stream("diffusion");
    Rng jumps = Rng(cfg.seed).stream("jumps");

    const double dt = 1.0 / static_cast<double>(cfg.n_per_day);
    const double sqrt_dt = std::sqrt(dt);

    SimResult out;
    out.panel.asset_id = "sim";
    out.panel.dates.reserve(cfg.days);
    out.panel.returns.reserve(cfg.days);
    out.true_qv.reserve(cfg.days);

    double v = 0.0;   // spot variance state for the square-root model
    if (const auto* sv = std::get_if<SqrtVol>(&cfg.vol_model)) v = sv->theta;

    for (std::size_t day = 0; day < cfg.days; ++day) {
        std::vector<double> rets(cfg.n_per_day);
        KahanSum qv;
        for (std::size_t j = 0; j < cfg.n_per_day; ++j) {
            double spot_var = 0.0;
            if (const auto* cv = std::get_if<ConstantVol>(&cfg.vol_model)) {
                spot_var = cv->sigma * cv->sigma;
            } else {
                const auto& sv = std::get<SqrtVol>(cfg.vol_model);
                const double v_plus = std::max(v, 0.0);
                spot_var = v_plus;
                v = v + sv.kappa * (sv.theta - v_plus) * dt +
                    sv.xi * std::sqrt(v_plus) * sqrt_dt * diffusion.gauss();
            }
            double r = cfg.mu * dt + std::sqrt(spot_var) * sqrt_dt * diffusion.gauss();
            qv.add(spot_var * dt);
            if (cfg.jump.intensity > 0.0) {
                const int k = detail::poisson_count(jumps, cfg.jump.intensity * dt);
                for (int q = 0; q < k; ++q) {
                    const double jump = jumps.gauss(0.0, cfg.jump.size_std);
                    r += jump;
                    qv.add(jump * jump);
                }
            }
            rets[j] = r;
        }
        out.panel.dates.push_back(detail::synthetic_date(day));
        out.panel.returns.push_back(std::move(rets));
        out.true_qv.push_back(qv.value());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Direct HAR-process generator (known ground truth for coefficient recovery)
// ---------------------------------------------------------------------------

struct HarGenConfig {
    double beta0 = 0.1;
    double beta1 = 0.5;
    double beta2 = 0.3;
    double beta3 = 0.1;
    double noise_std = 0.0;
    std::size_t days = 1000;
    std::uint64_t seed = 1;

    void validate() const {
        if (beta1 + beta2 + beta3 >= 1.0)
            throw ConfigError("HarGenConfig: beta1+beta2+beta3 must be < 1 for stationarity");
        if (noise_std < 0.0) throw ConfigError("HarGenConfig: noise_std must be nonnegative");
        if (days < 1) throw ConfigError("HarGenConfig: days must be >= 1");
    }

    double fixed_point() const { return beta0 / (1.0 - beta1 - beta2 - beta3); }
};

/// Iterates the daily/weekly/monthly autoregression with Gaussian noise
/// truncated so the series stays positive. A 500-day warm-up is discarded.
inline DailySeries generate_har_series(const HarGenConfig& cfg) {
    cfg.validate();
    constexpr std::size_t kWarmUp = 500;
    Rng rng = Rng(cfg.seed).stream("har-gen");

    const double start = cfg.fixed_point();
    std::vector<double> rv(kLagBurnIn, start > 0.0 ? start : 1e-8);
    rv.reserve(kLagBurnIn + kWarmUp + cfg.days);

    auto window_mean = [&](std::size_t t, std::size_t h) {
        KahanSum s;
        for (std::size_t i = 1; i <= h; ++i) s.add(rv[t - i]);
        return s.value() / static_cast<double>(h);
    };

    const std::size_t total = kLagBurnIn + kWarmUp + cfg.days;
    for (std::size_t t = kLagBurnIn; t < total; ++t) {
        const double det = cfg.beta0 + cfg.beta1 * rv[t - 1] + cfg.beta2 * window_mean(t, 5) +
                           cfg.beta3 * window_mean(t, 22);
        double u = 0.0;
        if (cfg.noise_std > 0.0) {
            // keep RV_t strictly positive
            const double lo = -det + 1e-12;
            const double hi = std::max(8.0 * cfg.noise_std, lo + 8.0 * cfg.noise_std);
            u = rng.truncated_gauss(cfg.noise_std, lo, hi);
        }
        rv.push_back(det + u);
    }

    DailySeries out;
    out.asset_id = "har-gen";
    out.dates.reserve(cfg.days);
    out.values.assign(rv.end() - static_cast<std::ptrdiff_t>(cfg.days), rv.end());
    for (std::size_t d = 0; d < cfg.days; ++d) out.dates.push_back(detail::synthetic_date(d));
    return out;
}

}  // namespace volaforge
