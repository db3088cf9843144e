#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "volaforge/core.hpp"
#include "volaforge/models.hpp"

namespace volaforge {

// ---------------------------------------------------------------------------
// Accumulated local effects
// ---------------------------------------------------------------------------

/// ALE curve of one feature: quantile bin edges, per-bin local effects, the
/// accumulated (uncentered) curve and the centered curve whose mean over the
/// training observations is zero.
struct AleCurve {
    std::string feature;
    std::size_t feature_index = 0;
    std::vector<double> edges;         // z_0 < ... < z_K (z_0 = min - eps)
    std::vector<double> local;         // per-bin mean prediction difference, size K
    std::vector<double> uncentered;    // partial sums at the edges, size K+1, [0] = 0
    std::vector<double> centered;      // uncentered minus the training mean
    std::vector<std::size_t> counts;   // rows per bin, size K
    bool constant_feature = false;
    bool bins_reduced = false;         // heavy ties collapsed some quantile edges

    std::size_t n_bins() const { return local.size(); }

    /// Step interpolation: the value at the right edge of the bin holding z.
    double value_at(double z) const {
        if (edges.size() < 2) return 0.0;
        if (z <= edges.front()) return centered.front();
        const auto it = std::lower_bound(edges.begin() + 1, edges.end(), z);
        const auto k = it == edges.end() ? edges.size() - 1
                                         : static_cast<std::size_t>(it - edges.begin());
        return centered[k];
    }
};

/// Estimates the ALE of feature j on the fitted model over the training
/// matrix: quantile edges with (nominally) equally filled bins, per-bin
/// averaged prediction differences with the feature pinned to consecutive
/// edges, accumulated left to right and centered at the training points.
inline AleCurve ale_estimate(const Forecaster& model,
                             const std::vector<std::vector<double>>& x_train, std::size_t j,
                             int bins = 100) {
    if (x_train.empty()) throw DataError("ale_estimate: empty training matrix");
    if (j >= x_train.front().size()) throw ConfigError("ale_estimate: feature index out of range");
    if (bins < 1) throw ConfigError("ale_estimate: need at least one bin");
    const std::size_t n = x_train.size();

    AleCurve curve;
    curve.feature_index = j;

    std::vector<double> values(n);
    for (std::size_t t = 0; t < n; ++t) values[t] = x_train[t][j];
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted.front(), hi = sorted.back();
    if (lo == hi) {
        curve.constant_feature = true;
        curve.edges = {lo, hi};
        curve.local = {0.0};
        curve.uncentered = {0.0, 0.0};
        curve.centered = {0.0, 0.0};
        curve.counts = {n};
        return curve;
    }

    const double eps = 1e-9 * (hi - lo);
    curve.edges.push_back(lo - eps);
    const auto requested = static_cast<std::size_t>(bins);
    for (std::size_t k = 1; k <= requested; ++k) {
        const auto pos = static_cast<std::size_t>(std::ceil(
            static_cast<double>(k) * static_cast<double>(n) / static_cast<double>(requested)));
        const double edge = sorted[std::min(pos, n) - 1];
        if (edge > curve.edges.back()) curve.edges.push_back(edge);
    }
    if (curve.edges.back() < hi) curve.edges.push_back(hi);
    const std::size_t K = curve.edges.size() - 1;
    curve.bins_reduced = K < requested;

    // rows per bin: z in (e_{k-1}, e_k]
    std::vector<std::vector<std::size_t>> rows_in_bin(K);
    for (std::size_t t = 0; t < n; ++t) {
        const auto it = std::lower_bound(curve.edges.begin() + 1, curve.edges.end(), values[t]);
        const auto k = static_cast<std::size_t>(it - curve.edges.begin()) - 1;
        rows_in_bin[std::min(k, K - 1)].push_back(t);
    }

    curve.local.assign(K, 0.0);
    curve.counts.assign(K, 0);
    std::vector<double> probe;
    for (std::size_t k = 0; k < K; ++k) {
        curve.counts[k] = rows_in_bin[k].size();
        if (rows_in_bin[k].empty()) continue;
        KahanSum acc;
        for (std::size_t t : rows_in_bin[k]) {
            probe = x_train[t];
            probe[j] = curve.edges[k + 1];
            const double up = model.predict(probe);
            probe[j] = curve.edges[k];
            const double dn = model.predict(probe);
            acc.add(up - dn);
        }
        curve.local[k] = acc.value() / static_cast<double>(rows_in_bin[k].size());
    }

    curve.uncentered.assign(K + 1, 0.0);
    for (std::size_t k = 0; k < K; ++k)
        curve.uncentered[k + 1] = curve.uncentered[k] + curve.local[k];

    // center so the curve evaluated at every training observation has mean 0
    KahanSum mean_acc;
    for (std::size_t k = 0; k < K; ++k)
        mean_acc.add(static_cast<double>(curve.counts[k]) * curve.uncentered[k + 1]);
    const double center = mean_acc.value() / static_cast<double>(n);
    curve.centered.resize(K + 1);
    for (std::size_t e = 0; e <= K; ++e) curve.centered[e] = curve.uncentered[e] - center;
    return curve;
}

// ---------------------------------------------------------------------------
// Variable importance
// ---------------------------------------------------------------------------

/// Per-feature importance: the sample standard deviation of the centered ALE
/// evaluated at the training observations, normalized to sum to one.
struct ViScore {
    std::vector<double> importance;   // I(Z_j) >= 0
    std::vector<double> vi;           // importance / sum, sums to 1
    bool uniform_fallback = false;    // every curve was flat
};

inline ViScore variable_importance(const std::vector<AleCurve>& curves,
                                   const std::vector<std::vector<double>>& x_train) {
    if (curves.empty()) throw ConfigError("variable_importance: no curves");
    const std::size_t n = x_train.size();
    if (n < 2) throw SizingError("variable_importance: need at least two training rows");
    ViScore score;
    score.importance.reserve(curves.size());
    for (const auto& curve : curves) {
        // sum of squared centered values at the training points, via counts
        KahanSum ss;
        for (std::size_t k = 0; k < curve.n_bins(); ++k)
            ss.add(static_cast<double>(curve.counts[k]) * curve.centered[k + 1] *
                   curve.centered[k + 1]);
        score.importance.push_back(std::sqrt(ss.value() / static_cast<double>(n - 1)));
    }
    double total = 0.0;
    for (double i : score.importance) total += i;
    if (total <= 0.0) {
        score.uniform_fallback = true;
        score.vi.assign(curves.size(), 1.0 / static_cast<double>(curves.size()));
        return score;
    }
    score.vi.reserve(curves.size());
    for (double i : score.importance) score.vi.push_back(i / total);
    return score;
}

}  // namespace volaforge
