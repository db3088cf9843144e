#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "volaforge/core.hpp"

namespace volaforge::stats {

inline double mean(std::span<const double> xs) {
    if (xs.empty()) throw DataError("mean of empty sequence");
    KahanSum s;
    for (double x : xs) s.add(x);
    return s.value() / static_cast<double>(xs.size());
}

/// Variance with divisor N (population convention).
inline double variance_pop(std::span<const double> xs) {
    const double m = mean(xs);
    KahanSum s;
    for (double x : xs) s.add((x - m) * (x - m));
    return s.value() / static_cast<double>(xs.size());
}

/// Variance with divisor N-1.
inline double variance_sample(std::span<const double> xs) {
    if (xs.size() < 2) throw DataError("sample variance needs >= 2 points");
    const double m = mean(xs);
    KahanSum s;
    for (double x : xs) s.add((x - m) * (x - m));
    return s.value() / static_cast<double>(xs.size() - 1);
}

inline double stddev_pop(std::span<const double> xs) { return std::sqrt(variance_pop(xs)); }
inline double stddev_sample(std::span<const double> xs) { return std::sqrt(variance_sample(xs)); }

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

/// Upper tail P(Z > x).
inline double normal_sf(double x) {
    return 0.5 * std::erfc(x / std::sqrt(2.0));
}

/// Upper tail of chi-squared with 1 or 2 degrees of freedom (closed forms).
inline double chi2_sf(double x, int dof) {
    if (x < 0.0) return 1.0;
    switch (dof) {
        case 1: return std::erfc(std::sqrt(0.5 * x));
        case 2: return std::exp(-0.5 * x);
        default: throw ConfigError("chi2_sf: only 1 and 2 dof supported");
    }
}

/// Lower inverse-CDF empirical quantile: the ceil(a*N)-th order statistic.
inline double quantile_lower(std::vector<double> xs, double a) {
    if (xs.empty()) throw DataError("quantile of empty sequence");
    if (a <= 0.0 || a >= 1.0) throw ConfigError("quantile level must be in (0,1)");
    std::sort(xs.begin(), xs.end());
    const auto n = xs.size();
    auto k = static_cast<std::size_t>(std::ceil(a * static_cast<double>(n)));
    if (k == 0) k = 1;
    if (k > n) k = n;
    return xs[k - 1];
}

/// Sample autocorrelations at lags 1..max_lag.
inline std::vector<double> acf(std::span<const double> xs, int max_lag) {
    const auto n = xs.size();
    if (n < 2) throw DataError("acf needs >= 2 points");
    const double m = mean(xs);
    KahanSum denom;
    for (double x : xs) denom.add((x - m) * (x - m));
    const double d = denom.value();
    if (d <= 0.0) throw NumericError("acf undefined for constant series");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(max_lag));
    for (int k = 1; k <= max_lag; ++k) {
        if (static_cast<std::size_t>(k) >= n) {
            out.push_back(0.0);
            continue;
        }
        KahanSum num;
        for (std::size_t t = static_cast<std::size_t>(k); t < n; ++t)
            num.add((xs[t] - m) * (xs[t - static_cast<std::size_t>(k)] - m));
        out.push_back(num.value() / d);
    }
    return out;
}

/// Newey-West long-run variance with Bartlett kernel, truncation `lags`.
inline double newey_west_lrv(std::span<const double> xs, int lags) {
    const auto n = xs.size();
    if (n < 2) throw DataError("newey_west_lrv needs >= 2 points");
    const double m = mean(xs);
    auto gamma = [&](int k) {
        KahanSum s;
        for (std::size_t t = static_cast<std::size_t>(k); t < n; ++t)
            s.add((xs[t] - m) * (xs[t - static_cast<std::size_t>(k)] - m));
        return s.value() / static_cast<double>(n);
    };
    double lrv = gamma(0);
    for (int k = 1; k <= lags && static_cast<std::size_t>(k) < n; ++k) {
        const double w = 1.0 - static_cast<double>(k) / static_cast<double>(lags + 1);
        lrv += 2.0 * w * gamma(k);
    }
    return lrv;
}

}  // namespace volaforge::stats
