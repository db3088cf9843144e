#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "volaforge/core.hpp"
#include "volaforge/timeseries.hpp"

namespace volaforge {

// Penalized least squares with the data-fit term averaged over observations:
//
//     F(b0, b) = (1/2T) sum_t (y_t - b0 - x_t'b)^2 + penalty(b)
//
//     ridge        penalty = lambda * sum b_i^2
//     lasso        penalty = lambda * sum w_i |b_i|          (w_i = 1 unless adaptive)
//     elastic net  penalty = lambda * (alpha * sum b_i^2 + (1-alpha) * sum |b_i|)
//
// NOTE the elastic-net convention: alpha multiplies the SQUARED term, so
// alpha = 1 is ridge and alpha = 0 is lasso. This is the reverse of the
// common glmnet convention and is kept deliberately.
//
// The intercept is never penalized. Averaging the data-fit term makes the
// lambda grid sample-size independent, so the grid's upper endpoint (1e2)
// reaches the constant model and the lower endpoint (1e-5) is effectively
// unregularized on standardized data.

enum class PenaltyKind { None, Ridge, Lasso, ElasticNet, AdaptiveLasso };

struct Penalty {
    PenaltyKind kind = PenaltyKind::None;
    double lambda = 0.0;
    double alpha = 0.0;
    std::vector<double> weights;   // adaptive lasso per-coefficient weights
};

struct LinearFit {
    double intercept = 0.0;
    std::vector<double> weights;
    Penalty penalty;
    double residual_variance = 0.0;   // sample variance of in-sample residuals
    std::vector<std::string> feature_names;
    bool used_jitter = false;         // rank-deficient design solved with ridge jitter
    bool intercept_only = false;      // post lasso with empty support
    int cd_sweeps = 0;
};

namespace detail {

/// Centered second-moment statistics over a contiguous row window.
struct GramStats {
    Eigen::MatrixXd gram;      // Xc'Xc / T
    Eigen::VectorXd xy;        // Xc'yc / T
    Eigen::VectorXd x_mean;
    double y_mean = 0.0;
    std::size_t n = 0;
};

inline GramStats gram_stats(const FeatureMatrix& fm, IndexRange rows) {
    const auto j = static_cast<Eigen::Index>(fm.n_cols());
    const std::size_t n = rows.size();
    if (n == 0) throw SizingError("linear fit: empty row window");
    GramStats g;
    g.n = n;
    g.x_mean = Eigen::VectorXd::Zero(j);
    for (std::size_t r = rows.begin; r < rows.end; ++r) {
        for (Eigen::Index c = 0; c < j; ++c) g.x_mean(c) += fm.rows[r][static_cast<std::size_t>(c)];
        g.y_mean += fm.target[r];
    }
    g.x_mean /= static_cast<double>(n);
    g.y_mean /= static_cast<double>(n);
    g.gram = Eigen::MatrixXd::Zero(j, j);
    g.xy = Eigen::VectorXd::Zero(j);
    Eigen::VectorXd xc(j);
    for (std::size_t r = rows.begin; r < rows.end; ++r) {
        for (Eigen::Index c = 0; c < j; ++c)
            xc(c) = fm.rows[r][static_cast<std::size_t>(c)] - g.x_mean(c);
        const double yc = fm.target[r] - g.y_mean;
        g.gram.selfadjointView<Eigen::Lower>().rankUpdate(xc, 1.0);
        g.xy += xc * yc;
    }
    g.gram = g.gram.selfadjointView<Eigen::Lower>();
    g.gram /= static_cast<double>(n);
    g.xy /= static_cast<double>(n);
    return g;
}

/// Solve (gram + 2*lambda*I) beta = xy. With lambda = 0 this is OLS; a
/// rank-deficient design falls back to a tiny ridge jitter when allowed.
inline Eigen::VectorXd solve_normal_equations(const GramStats& g, double lambda, bool allow_jitter,
                                              bool* jittered) {
    const auto j = g.gram.rows();
    Eigen::MatrixXd lhs = g.gram + 2.0 * lambda * Eigen::MatrixXd::Identity(j, j);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(lhs);
    const Eigen::VectorXd d = ldlt.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    const bool deficient = ldlt.info() != Eigen::Success || dmax <= 0.0 ||
                           d.cwiseAbs().minCoeff() < 1e-12 * dmax;
    if (deficient) {
        if (!allow_jitter) throw NumericError("linear fit: rank-deficient design");
        const double jitter = std::max(1e-10 * g.gram.trace() / static_cast<double>(j), 1e-300);
        lhs.diagonal().array() += jitter;
        ldlt.compute(lhs);
        if (jittered) *jittered = true;
    }
    return ldlt.solve(g.xy);
}

inline double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

struct CdOptions {
    double tol = 1e-10;          // max absolute coefficient change per sweep
    int max_sweeps = 100000;
};

/// Cyclic coordinate descent on the centered sufficient statistics.
/// `l1_weights` empty means unweighted. Warm start through `beta`.
inline int coordinate_descent(const GramStats& g, double lambda, double alpha,
                              std::span<const double> l1_weights, Eigen::VectorXd& beta,
                              const CdOptions& opts) {
    const auto j = g.gram.rows();
    Eigen::VectorXd q = g.gram * beta;   // maintained as gram * beta
    const double l2 = 2.0 * lambda * alpha;
    int sweep = 0;
    for (; sweep < opts.max_sweeps; ++sweep) {
        double max_delta = 0.0;
        for (Eigen::Index i = 0; i < j; ++i) {
            const double gii = g.gram(i, i);
            double next = 0.0;
            if (gii > 0.0) {
                const double rho = g.xy(i) - q(i) + gii * beta(i);
                const double w = l1_weights.empty() ? 1.0 : l1_weights[static_cast<std::size_t>(i)];
                next = soft_threshold(rho, lambda * (1.0 - alpha) * w) / (gii + l2);
            }
            const double delta = next - beta(i);
            if (delta != 0.0) {
                q += g.gram.col(i) * delta;
                beta(i) = next;
                max_delta = std::max(max_delta, std::abs(delta));
            }
        }
        if (max_delta < opts.tol) return sweep + 1;
    }
    throw NumericError("coordinate descent: no convergence after " +
                       std::to_string(opts.max_sweeps) + " sweeps (lambda=" +
                       std::to_string(lambda) + ", alpha=" + std::to_string(alpha) + ")");
}

inline LinearFit finalize(const FeatureMatrix& fm, const GramStats& g, const Eigen::VectorXd& beta,
                          Penalty penalty) {
    LinearFit fit;
    fit.feature_names = fm.column_names;
    fit.weights.assign(beta.data(), beta.data() + beta.size());
    fit.intercept = g.y_mean - g.x_mean.dot(beta);
    fit.penalty = std::move(penalty);
    return fit;
}

}  // namespace detail

inline double predict_linear(const LinearFit& fit, std::span<const double> row,
                             bool log_space = false) {
    if (row.size() != fit.weights.size())
        throw DataError("predict_linear: row has " + std::to_string(row.size()) +
                        " features, fit has " + std::to_string(fit.weights.size()));
    double f = fit.intercept;
    for (std::size_t i = 0; i < row.size(); ++i) f += fit.weights[i] * row[i];
    // Back-transform for models fitted on log targets; the exp alone is biased
    // low by Jensen's inequality, the half-variance term corrects it under
    // Gaussian log-targets.
    if (log_space) return std::exp(f + 0.5 * fit.residual_variance);
    return f;
}

/// Sample variance of in-sample residuals over the given row ranges
/// (model-space residuals; feeds the log-target back-transform).
inline double residual_variance_over(const LinearFit& fit, const FeatureMatrix& fm,
                                     const std::vector<IndexRange>& ranges) {
    std::vector<double> residuals;
    for (const auto& range : ranges)
        for (std::size_t r = range.begin; r < range.end; ++r)
            residuals.push_back(fm.target[r] - predict_linear(fit, fm.rows[r]));
    if (residuals.size() < 2) return 0.0;
    double m = 0.0;
    for (double e : residuals) m += e;
    m /= static_cast<double>(residuals.size());
    double ss = 0.0;
    for (double e : residuals) ss += (e - m) * (e - m);
    return ss / static_cast<double>(residuals.size() - 1);
}

struct OlsOptions {
    bool allow_jitter = true;
};

inline LinearFit fit_ols(const FeatureMatrix& fm, std::optional<IndexRange> window = {},
                         const OlsOptions& opts = {}) {
    const IndexRange rows = window.value_or(fm.split.train);
    if (rows.size() < fm.n_cols() + 1)
        throw SizingError("fit_ols: need more rows than columns");
    const auto g = detail::gram_stats(fm, rows);
    bool jittered = false;
    const Eigen::VectorXd beta = detail::solve_normal_equations(g, 0.0, opts.allow_jitter, &jittered);
    LinearFit fit = detail::finalize(fm, g, beta, Penalty{PenaltyKind::None, 0.0, 0.0, {}});
    fit.used_jitter = jittered;
    fit.residual_variance = residual_variance_over(fit, fm, {rows});
    return fit;
}

inline LinearFit fit_ridge(const FeatureMatrix& fm, double lambda,
                           std::optional<IndexRange> window = {}) {
    if (lambda < 0.0) throw ConfigError("fit_ridge: lambda must be nonnegative");
    const IndexRange rows = window.value_or(fm.split.train);
    const auto g = detail::gram_stats(fm, rows);
    bool jittered = false;
    const Eigen::VectorXd beta =
        detail::solve_normal_equations(g, lambda, /*allow_jitter=*/lambda == 0.0, &jittered);
    LinearFit fit = detail::finalize(fm, g, beta, Penalty{PenaltyKind::Ridge, lambda, 0.0, {}});
    fit.used_jitter = jittered;
    fit.residual_variance = residual_variance_over(fit, fm, {rows});
    return fit;
}

inline LinearFit fit_elastic_net(const FeatureMatrix& fm, double lambda, double alpha,
                                 std::optional<IndexRange> window = {},
                                 const detail::CdOptions& cd = {}) {
    if (lambda < 0.0) throw ConfigError("fit_elastic_net: lambda must be nonnegative");
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("fit_elastic_net: alpha must be in [0,1]");
    const IndexRange rows = window.value_or(fm.split.train);
    const auto g = detail::gram_stats(fm, rows);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fm.n_cols()));
    const int sweeps = detail::coordinate_descent(g, lambda, alpha, {}, beta, cd);
    LinearFit fit = detail::finalize(fm, g, beta, Penalty{PenaltyKind::ElasticNet, lambda, alpha, {}});
    fit.cd_sweeps = sweeps;
    fit.residual_variance = residual_variance_over(fit, fm, {rows});
    return fit;
}

/// Pure-L1 coordinate descent with optional per-coefficient weights. This is
/// a separate solver path from fit_elastic_net(alpha=0); the two are
/// cross-checked against each other in the test suite.
inline LinearFit fit_lasso(const FeatureMatrix& fm, double lambda,
                           std::optional<IndexRange> window = {},
                           std::span<const double> l1_weights = {},
                           const detail::CdOptions& cd = {}) {
    if (lambda < 0.0) throw ConfigError("fit_lasso: lambda must be nonnegative");
    const IndexRange rows = window.value_or(fm.split.train);
    const auto g = detail::gram_stats(fm, rows);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fm.n_cols()));
    const int sweeps = detail::coordinate_descent(g, lambda, 0.0, l1_weights, beta, cd);
    Penalty p{PenaltyKind::Lasso, lambda, 0.0, {}};
    if (!l1_weights.empty()) p.weights.assign(l1_weights.begin(), l1_weights.end());
    LinearFit fit = detail::finalize(fm, g, beta, std::move(p));
    fit.cd_sweeps = sweeps;
    fit.residual_variance = residual_variance_over(fit, fm, {rows});
    return fit;
}

/// Two-stage estimator: unrestricted OLS, then lasso with per-coefficient
/// weights 1/|beta_ols|. First-stage zeros receive weight 1e12, which
/// effectively excludes the column.
inline LinearFit fit_adaptive_lasso(const FeatureMatrix& fm, double lambda,
                                    std::optional<IndexRange> window = {}) {
    const IndexRange rows = window.value_or(fm.split.train);
    const LinearFit first = fit_ols(fm, rows);
    std::vector<double> w(first.weights.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double mag = std::abs(first.weights[i]);
        w[i] = mag < 1e-12 ? 1e12 : 1.0 / mag;
    }
    LinearFit fit = fit_lasso(fm, lambda, rows, w);
    fit.penalty.kind = PenaltyKind::AdaptiveLasso;
    fit.penalty.weights = std::move(w);
    return fit;
}

/// Lasso selection followed by unrestricted OLS on the surviving columns.
/// Dropped columns keep weight 0; an empty support degenerates to the
/// intercept-only (training mean) model.
inline LinearFit fit_post_lasso(const FeatureMatrix& fm, double lambda,
                                std::optional<IndexRange> window = {}) {
    const IndexRange rows = window.value_or(fm.split.train);
    const LinearFit stage1 = fit_lasso(fm, lambda, rows);
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < stage1.weights.size(); ++i)
        if (stage1.weights[i] != 0.0) support.push_back(i);

    LinearFit fit;
    fit.feature_names = fm.column_names;
    fit.weights.assign(fm.n_cols(), 0.0);
    fit.penalty = Penalty{PenaltyKind::Lasso, lambda, 0.0, {}};
    if (support.empty()) {
        double m = 0.0;
        for (std::size_t r = rows.begin; r < rows.end; ++r) m += fm.target[r];
        fit.intercept = m / static_cast<double>(rows.size());
        fit.intercept_only = true;
    } else {
        FeatureMatrix sub;
        sub.split = fm.split;
        sub.target = fm.target;
        for (std::size_t i : support) sub.column_names.push_back(fm.column_names[i]);
        sub.rows.reserve(fm.n_rows());
        for (const auto& row : fm.rows) {
            std::vector<double> r(support.size());
            for (std::size_t k = 0; k < support.size(); ++k) r[k] = row[support[k]];
            sub.rows.push_back(std::move(r));
        }
        const LinearFit stage2 = fit_ols(sub, rows);
        fit.intercept = stage2.intercept;
        fit.used_jitter = stage2.used_jitter;
        for (std::size_t k = 0; k < support.size(); ++k) fit.weights[support[k]] = stage2.weights[k];
    }
    fit.residual_variance = residual_variance_over(fit, fm, {rows});
    return fit;
}

/// t-statistics under White's heteroskedasticity-robust covariance (HC0),
/// intercept first. Reporting aid for the HAR/HAR-X coefficient table.
inline std::vector<double> white_tstats(const FeatureMatrix& fm, const LinearFit& fit,
                                        std::optional<IndexRange> window = {}) {
    const IndexRange rows = window.value_or(fm.split.train);
    const auto j = static_cast<Eigen::Index>(fm.n_cols());
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd x(n, j + 1);
    Eigen::VectorXd e(n);
    for (std::size_t r = rows.begin; r < rows.end; ++r) {
        const auto i = static_cast<Eigen::Index>(r - rows.begin);
        x(i, 0) = 1.0;
        for (Eigen::Index c = 0; c < j; ++c)
            x(i, c + 1) = fm.rows[r][static_cast<std::size_t>(c)];
        e(i) = fm.target[r] - predict_linear(fit, fm.rows[r]);
    }
    const Eigen::MatrixXd xtx_inv = (x.transpose() * x).ldlt().solve(
        Eigen::MatrixXd::Identity(j + 1, j + 1));
    const Eigen::MatrixXd meat = x.transpose() * e.array().square().matrix().asDiagonal() * x;
    const Eigen::MatrixXd cov = xtx_inv * meat * xtx_inv;
    std::vector<double> t(static_cast<std::size_t>(j) + 1);
    t[0] = fit.intercept / std::sqrt(cov(0, 0));
    for (Eigen::Index c = 0; c < j; ++c)
        t[static_cast<std::size_t>(c) + 1] = fit.weights[static_cast<std::size_t>(c)] /
                                             std::sqrt(cov(c + 1, c + 1));
    return t;
}

}  // namespace volaforge
