#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "volaforge/core.hpp"
#include "volaforge/stats.hpp"

namespace volaforge {

// ---------------------------------------------------------------------------
// Filtered historical simulation VaR
// ---------------------------------------------------------------------------

/// One-day VaR in return units (negative for the left tail): the volatility
/// forecast scales the empirical alpha-quantile of the devolatized in-sample
/// returns. Quantile convention: lower inverse CDF.
inline double fhs_var(double vol_forecast, std::span<const double> standardized_residuals,
                      double alpha) {
    if (standardized_residuals.empty()) throw DataError("fhs_var: empty residual window");
    if (standardized_residuals.size() < 250)
        throw SizingError("fhs_var: need at least 250 in-sample residuals, have " +
                          std::to_string(standardized_residuals.size()));
    if (vol_forecast < 0.0) throw ConfigError("fhs_var: negative variance forecast");
    const double q = stats::quantile_lower(
        std::vector<double>(standardized_residuals.begin(), standardized_residuals.end()), alpha);
    return std::sqrt(vol_forecast) * q;
}

/// Asymmetric check loss (alpha - d)(r - VaR) with d = 1{r < VaR}, averaged
/// over the evaluation window.
inline double quantile_loss(std::span<const double> returns, std::span<const double> var_forecasts,
                            double alpha) {
    if (returns.size() != var_forecasts.size()) throw DataError("quantile_loss: misaligned series");
    if (returns.empty()) throw DataError("quantile_loss: empty series");
    KahanSum s;
    for (std::size_t t = 0; t < returns.size(); ++t) {
        const double d = returns[t] < var_forecasts[t] ? 1.0 : 0.0;
        s.add((alpha - d) * (returns[t] - var_forecasts[t]));
    }
    return s.value() / static_cast<double>(returns.size());
}

inline std::vector<int> var_hits(std::span<const double> returns,
                                 std::span<const double> var_forecasts) {
    if (returns.size() != var_forecasts.size()) throw DataError("var_hits: misaligned series");
    std::vector<int> hits(returns.size());
    for (std::size_t t = 0; t < returns.size(); ++t) hits[t] = returns[t] < var_forecasts[t];
    return hits;
}

// ---------------------------------------------------------------------------
// Coverage tests
// ---------------------------------------------------------------------------

struct CoverageReport {
    double exceedance_rate = 0.0;
    double kupiec_lr = 0.0;
    double kupiec_p = 1.0;
    double independence_lr = 0.0;
    double independence_p = 1.0;
    double conditional_lr = 0.0;   // kupiec_lr + independence_lr by construction
    double conditional_p = 1.0;
    std::size_t hits = 0;
    std::size_t days = 0;
    bool low_power = false;        // empty or saturated hit sequence
};

namespace detail {

inline double xlogy(double x, double y) { return x > 0.0 ? x * std::log(y) : 0.0; }

}  // namespace detail

/// Likelihood-ratio tests of unconditional coverage and first-order
/// independence of the hit sequence; their sum tests conditional coverage
/// against a chi-squared with two degrees of freedom.
inline CoverageReport coverage_tests(const std::vector<int>& hits, double alpha) {
    const std::size_t n = hits.size();
    if (n < 100) throw SizingError("coverage_tests: need at least 100 observations");
    if (alpha <= 0.0 || alpha >= 1.0) throw ConfigError("coverage_tests: alpha in (0,1)");

    CoverageReport rep;
    rep.days = n;
    for (int h : hits) rep.hits += h ? 1 : 0;
    const double t1 = static_cast<double>(rep.hits);
    const double t0 = static_cast<double>(n) - t1;
    rep.exceedance_rate = t1 / static_cast<double>(n);
    rep.low_power = rep.hits == 0 || rep.hits == n;

    const double pi_hat = rep.exceedance_rate;
    rep.kupiec_lr = -2.0 * (detail::xlogy(t0, 1.0 - alpha) + detail::xlogy(t1, alpha) -
                            detail::xlogy(t0, 1.0 - pi_hat) - detail::xlogy(t1, pi_hat));
    if (rep.kupiec_lr < 0.0) rep.kupiec_lr = 0.0;   // guard rounding at pi_hat == alpha
    rep.kupiec_p = stats::chi2_sf(rep.kupiec_lr, 1);

    // first-order transition counts
    double n00 = 0, n01 = 0, n10 = 0, n11 = 0;
    for (std::size_t t = 1; t < n; ++t) {
        if (hits[t - 1] == 0 && hits[t] == 0) ++n00;
        if (hits[t - 1] == 0 && hits[t] == 1) ++n01;
        if (hits[t - 1] == 1 && hits[t] == 0) ++n10;
        if (hits[t - 1] == 1 && hits[t] == 1) ++n11;
    }
    const double pi01 = (n00 + n01) > 0 ? n01 / (n00 + n01) : 0.0;
    const double pi11 = (n10 + n11) > 0 ? n11 / (n10 + n11) : 0.0;
    const double pi = (n01 + n11) / (n00 + n01 + n10 + n11);
    const double log_null = detail::xlogy(n00 + n10, 1.0 - pi) + detail::xlogy(n01 + n11, pi);
    const double log_alt = detail::xlogy(n00, 1.0 - pi01) + detail::xlogy(n01, pi01) +
                           detail::xlogy(n10, 1.0 - pi11) + detail::xlogy(n11, pi11);
    rep.independence_lr = std::max(0.0, -2.0 * (log_null - log_alt));
    rep.independence_p = stats::chi2_sf(rep.independence_lr, 1);

    rep.conditional_lr = rep.kupiec_lr + rep.independence_lr;
    rep.conditional_p = stats::chi2_sf(rep.conditional_lr, 2);
    return rep;
}

}  // namespace volaforge
