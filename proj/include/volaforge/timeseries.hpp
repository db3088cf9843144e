#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "volaforge/core.hpp"

namespace volaforge {

/// Trading days "lost to the lagging": the monthly lag window.
inline constexpr std::size_t kLagBurnIn = 22;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Per-asset, per-day grid of intraday log-returns (decimal units).
/// Every day must carry the same number of returns; ragged days are rejected.
struct IntradayPanel {
    std::string asset_id;
    std::vector<std::string> dates;                // ISO-8601, strictly increasing
    std::vector<std::vector<double>> returns;      // one fixed-length row per date

    std::size_t days() const { return dates.size(); }
    std::size_t returns_per_day() const { return returns.empty() ? 0 : returns.front().size(); }

    void validate() const {
        if (dates.size() != returns.size())
            throw DataError("IntradayPanel: dates/returns length mismatch");
        if (returns.empty()) throw DataError("IntradayPanel: empty panel");
        const std::size_t n = returns.front().size();
        if (n < 2) throw DataError("IntradayPanel: need at least 2 intraday returns per day");
        for (std::size_t d = 0; d < returns.size(); ++d) {
            if (returns[d].size() != n)
                throw DataError("IntradayPanel: ragged day " + dates[d] + " (" +
                                std::to_string(returns[d].size()) + " vs " + std::to_string(n) +
                                " returns)");
            for (double r : returns[d])
                if (!std::isfinite(r)) throw DataError("IntradayPanel: non-finite return on " + dates[d]);
        }
        for (std::size_t d = 1; d < dates.size(); ++d)
            if (!(dates[d - 1] < dates[d]))
                throw DataError("IntradayPanel: dates not strictly increasing near " + dates[d]);
    }
};

/// One aligned daily series (realized variance or a covariate).
struct DailySeries {
    std::string asset_id;
    std::vector<std::string> dates;
    std::vector<double> values;

    void validate() const {
        if (dates.size() != values.size())
            throw DataError("DailySeries: dates/values length mismatch");
        for (std::size_t d = 1; d < dates.size(); ++d)
            if (!(dates[d - 1] < dates[d]))
                throw DataError("DailySeries: dates not strictly increasing near " + dates[d]);
        for (std::size_t d = 0; d < values.size(); ++d)
            if (!std::isfinite(values[d]))
                throw DataError("DailySeries: missing/non-finite value on " + dates[d]);
    }
};

/// Half-open index range [begin, end).
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
    bool contains(std::size_t i) const { return i >= begin && i < end; }
};

/// Contiguous, disjoint, ordered row ranges over the usable sample
/// (rows start after the 22-day lag burn-in; row r targets day burn_in + r).
struct DataSplit {
    IndexRange train;
    IndexRange validation;
    IndexRange test;
    std::size_t burn_in = kLagBurnIn;

    std::size_t usable_rows() const { return test.end; }
};

enum class SplitScheme {
    Percent70_10_20,   // 70/10/20 of the post-burn-in sample
    FixedTrain1000,    // 1000-day training window, 200-day validation
    FixedTrain2000,    // 2000-day training window, 200-day validation
};

/// Split the sample per the chosen scheme. `total_days` counts calendar rows
/// of the raw series; the first 22 are consumed by the monthly lag.
inline DataSplit make_split(std::size_t total_days, SplitScheme scheme) {
    if (total_days < 30)
        throw SizingError("make_split: need at least 30 days (burn-in plus one row per segment)");
    const std::size_t usable = total_days - kLagBurnIn;
    std::size_t n_train = 0, n_val = 0, n_test = 0;
    switch (scheme) {
        case SplitScheme::Percent70_10_20: {
            n_train = static_cast<std::size_t>(0.70 * static_cast<double>(usable));
            n_test = static_cast<std::size_t>(0.20 * static_cast<double>(usable));
            n_val = usable - n_train - n_test;
            break;
        }
        case SplitScheme::FixedTrain1000:
        case SplitScheme::FixedTrain2000: {
            n_train = scheme == SplitScheme::FixedTrain1000 ? 1000 : 2000;
            n_val = 200;
            if (usable <= n_train + n_val)
                throw SizingError("make_split: " + std::to_string(total_days) +
                                  " days leave no test rows after burn-in, " +
                                  std::to_string(n_train) + " training and 200 validation days");
            n_test = usable - n_train - n_val;
            break;
        }
    }
    if (n_train == 0 || n_val == 0 || n_test == 0)
        throw SizingError("make_split: a segment would be empty for " +
                          std::to_string(total_days) + " days");
    DataSplit s;
    s.train = {0, n_train};
    s.validation = {n_train, n_train + n_val};
    s.test = {n_train + n_val, n_train + n_val + n_test};
    s.burn_in = kLagBurnIn;
    return s;
}

// ---------------------------------------------------------------------------
// Feature matrix and standardization
// ---------------------------------------------------------------------------

struct ColumnStats {
    double mean = 0.0;
    double std = 1.0;
    bool scaled = true;   // false for constant or intentionally raw columns (e.g. 0/1 dummies)
};

/// Design matrix with named columns and a target, split-tagged by row ranges.
/// `target` is in model space (possibly log-transformed, possibly scaled by
/// `target_stats`); `realized` always holds the natural realized-variance
/// target used for evaluation and sanitation.
struct FeatureMatrix {
    std::vector<std::string> column_names;
    std::vector<std::vector<double>> rows;
    std::vector<double> target;
    std::vector<double> realized;
    std::vector<std::size_t> day_index;        // information day of each row
    DataSplit split;
    std::vector<ColumnStats> standardization;  // empty until standardize()
    ColumnStats target_stats{0.0, 1.0, false}; // train-set scaling of `target`

    std::size_t n_rows() const { return rows.size(); }
    std::size_t n_cols() const { return column_names.size(); }
    bool standardized() const { return !standardization.empty(); }
};

/// Standardize every column with mean/std taken from training rows only
/// (std uses the divisor-N convention). Columns listed in `skip` and constant
/// columns pass through unscaled with (mean 0, std 1) recorded.
inline FeatureMatrix standardize(const FeatureMatrix& fm,
                                 const std::vector<std::size_t>& skip = {}) {
    if (fm.standardized()) throw DataError("standardize: matrix already standardized");
    if (fm.split.train.size() == 0) throw DataError("standardize: no training rows");
    FeatureMatrix out = fm;
    const std::size_t cols = fm.n_cols();
    out.standardization.assign(cols, ColumnStats{});
    for (std::size_t j = 0; j < cols; ++j) {
        if (std::find(skip.begin(), skip.end(), j) != skip.end()) {
            out.standardization[j] = {0.0, 1.0, false};
            continue;
        }
        KahanSum sum;
        for (std::size_t r = fm.split.train.begin; r < fm.split.train.end; ++r)
            sum.add(fm.rows[r][j]);
        const double m = sum.value() / static_cast<double>(fm.split.train.size());
        KahanSum ss;
        for (std::size_t r = fm.split.train.begin; r < fm.split.train.end; ++r)
            ss.add((fm.rows[r][j] - m) * (fm.rows[r][j] - m));
        const double sd = std::sqrt(ss.value() / static_cast<double>(fm.split.train.size()));
        if (sd <= 0.0) {
            out.standardization[j] = {0.0, 1.0, false};  // constant column: pass through
            continue;
        }
        out.standardization[j] = {m, sd, true};
        for (auto& row : out.rows) row[j] = (row[j] - m) / sd;
    }
    return out;
}

/// Undo standardize() exactly (scaled columns only; raw columns are identity).
inline FeatureMatrix inverse_standardize(const FeatureMatrix& fm) {
    if (!fm.standardized()) throw DataError("inverse_standardize: matrix not standardized");
    FeatureMatrix out = fm;
    for (std::size_t j = 0; j < fm.n_cols(); ++j) {
        const auto& cs = fm.standardization[j];
        if (!cs.scaled) continue;
        for (auto& row : out.rows) row[j] = row[j] * cs.std + cs.mean;
    }
    out.standardization.clear();
    return out;
}

}  // namespace volaforge
