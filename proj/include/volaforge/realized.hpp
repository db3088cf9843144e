#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "volaforge/core.hpp"
#include "volaforge/csv.hpp"
#include "volaforge/timeseries.hpp"

namespace volaforge {

/// One asset-day of realized measures. Units: rv/rv_pos/rv_neg are daily
/// variance of log-returns (decimal^2), rq is decimal^4, ret_oc is the
/// open-to-close log-return (decimal).
struct RealizedDay {
    double rv = 0.0;
    double rv_pos = 0.0;
    double rv_neg = 0.0;
    double rq = 0.0;
    double ret_oc = 0.0;
};

/// Realized variance, signed semivariances, realized quarticity and the daily
/// open-to-close return from one day's intraday log-returns.
///
/// rv is assembled as rv_pos + rv_neg, each accumulated with an error-free
/// transform, so the semivariance decomposition holds bit-exactly.
inline RealizedDay realized_day(std::span<const double> returns) {
    if (returns.empty()) throw DataError("realized_day: empty return vector");
    if (returns.size() < 2) throw DataError("realized_day: need at least 2 intraday returns");
    KahanSum pos, neg, quart, oc;
    for (double r : returns) {
        if (!std::isfinite(r)) throw DataError("realized_day: non-finite return");
        const double r2 = r * r;
        if (r > 0.0)
            pos.add(r2);
        else if (r < 0.0)
            neg.add(r2);
        quart.add(r2 * r2);
        oc.add(r);
    }
    RealizedDay day;
    day.rv_pos = pos.value();
    day.rv_neg = neg.value();
    day.rv = day.rv_pos + day.rv_neg;
    day.rq = static_cast<double>(returns.size()) / 3.0 * quart.value();
    day.ret_oc = oc.value();
    return day;
}

inline std::vector<RealizedDay> realized_series(const IntradayPanel& panel) {
    panel.validate();
    std::vector<RealizedDay> out;
    out.reserve(panel.days());
    for (const auto& day : panel.returns) out.push_back(realized_day(day));
    return out;
}

/// Lagged regressors for forecasting day t: daily/weekly/monthly averages of
/// realized variance over the trailing 1/5/22-day windows ending at t-1, the
/// clamped negative aggregated returns, sqrt(RQ_{t-1}) and the lagged
/// semivariances.
struct LagSet {
    double rvd = 0.0;
    double rvw = 0.0;
    double rvm = 0.0;
    double rq_sqrt = 0.0;
    double retd_neg = 0.0;
    double retw_neg = 0.0;
    double retm_neg = 0.0;
    double rvd_pos = 0.0;
    double rvd_neg = 0.0;
};

inline LagSet build_lags(std::span<const RealizedDay> series, std::size_t t) {
    if (t < kLagBurnIn)
        throw SizingError("build_lags: day " + std::to_string(t) + " is inside the 22-day burn-in");
    if (t > series.size())
        throw SizingError("build_lags: day index beyond sample");
    auto rv_window = [&](std::size_t h) {
        KahanSum s;
        for (std::size_t i = 1; i <= h; ++i) s.add(series[t - i].rv);
        return s.value() / static_cast<double>(h);
    };
    auto ret_window = [&](std::size_t h) {
        KahanSum s;
        for (std::size_t i = 1; i <= h; ++i) s.add(series[t - i].ret_oc);
        return s.value() / static_cast<double>(h);
    };
    LagSet lags;
    lags.rvd = series[t - 1].rv;
    lags.rvw = rv_window(5);
    lags.rvm = rv_window(22);
    lags.rq_sqrt = std::sqrt(series[t - 1].rq);
    lags.retd_neg = std::min(0.0, ret_window(1));
    lags.retw_neg = std::min(0.0, ret_window(5));
    lags.retm_neg = std::min(0.0, ret_window(22));
    lags.rvd_pos = series[t - 1].rv_pos;
    lags.rvd_neg = series[t - 1].rv_neg;
    return lags;
}

/// Per-asset daily measure file consumed by the dataset builder.
inline void write_realized_csv(const std::string& path, const IntradayPanel& panel,
                               std::span<const RealizedDay> series,
                               const std::string& header_comment = "") {
    if (panel.days() != series.size())
        throw DataError("write_realized_csv: panel/series length mismatch");
    csv::Writer w(path);
    if (!header_comment.empty()) w.comment(header_comment);
    w.row({"date", "rv", "rv_pos", "rv_neg", "rq", "ret_oc"});
    for (std::size_t d = 0; d < series.size(); ++d) {
        const auto& m = series[d];
        w.row({panel.dates[d], csv::format_double(m.rv), csv::format_double(m.rv_pos),
               csv::format_double(m.rv_neg), csv::format_double(m.rq),
               csv::format_double(m.ret_oc)});
    }
}

inline std::vector<RealizedDay> read_realized_csv(const std::string& path,
                                                  std::vector<std::string>* dates_out = nullptr) {
    auto lines = csv::read_lines(path);
    if (lines.size() < 2) throw DataError("CSV: " + path + " has no data rows");
    auto header = csv::split_line(lines.front());
    const std::vector<std::string> expected = {"date", "rv", "rv_pos", "rv_neg", "rq", "ret_oc"};
    if (header != expected)
        throw DataError("CSV: " + path + " must have header date,rv,rv_pos,rv_neg,rq,ret_oc");
    std::vector<RealizedDay> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto f = csv::split_line(lines[i]);
        if (f.size() != 6) throw DataError("CSV: " + path + " row " + std::to_string(i) + " malformed");
        RealizedDay d;
        d.rv = csv::parse_double(f[1], path);
        d.rv_pos = csv::parse_double(f[2], path);
        d.rv_neg = csv::parse_double(f[3], path);
        d.rq = csv::parse_double(f[4], path);
        d.ret_oc = csv::parse_double(f[5], path);
        if (dates_out) dates_out->push_back(f[0]);
        out.push_back(d);
    }
    return out;
}

}  // namespace volaforge
