#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "volaforge/core.hpp"

namespace volaforge {

// ---------------------------------------------------------------------------
// CART regression tree
// ---------------------------------------------------------------------------

struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;   // leaf prediction: mean of routed training targets
    int count = 0;        // training rows at this node
    bool is_leaf() const { return left < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;   // nodes[0] is the root
    int min_node_size = 5;

    double predict(std::span<const double> row) const {
        int id = 0;
        for (;;) {
            const TreeNode& n = nodes[static_cast<std::size_t>(id)];
            if (n.is_leaf()) return n.value;
            if (row[static_cast<std::size_t>(n.feature)] <= n.threshold)
                id = n.left;
            else
                id = n.right;
        }
    }

    /// Leaf index a row is routed to (for leaf-semantics checks).
    std::size_t route(std::span<const double> row) const {
        int id = 0;
        for (;;) {
            const TreeNode& n = nodes[static_cast<std::size_t>(id)];
            if (n.is_leaf()) return static_cast<std::size_t>(id);
            id = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
        }
    }

    std::string dump(const std::vector<std::string>& feature_names = {}) const {
        std::ostringstream os;
        dump_node(os, 0, 0, feature_names);
        return os.str();
    }

  private:
    void dump_node(std::ostringstream& os, int id, int indent,
                   const std::vector<std::string>& names) const {
        const TreeNode& n = nodes[static_cast<std::size_t>(id)];
        for (int i = 0; i < indent; ++i) os << "  ";
        if (n.is_leaf()) {
            os << "leaf value=" << n.value << " [" << n.count << "]\n";
            return;
        }
        const std::string fname = n.feature < static_cast<int>(names.size())
                                      ? names[static_cast<std::size_t>(n.feature)]
                                      : "x" + std::to_string(n.feature);
        os << fname << " <= " << n.threshold << " [" << n.count << "]\n";
        dump_node(os, n.left, indent + 1, names);
        dump_node(os, n.right, indent + 1, names);
    }
};

struct CartOptions {
    int min_node_size = 5;
    std::optional<int> max_depth;           // split levels; 1 = stump
    std::optional<int> feature_subset;      // features drawn per split (random forest)
};

namespace detail {

struct BestSplit {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    std::size_t left_count = 0;
};

/// Greedy best split by SSE reduction; candidate thresholds are midpoints of
/// consecutive distinct sorted values. Ties break toward the lowest feature
/// index, then the lowest threshold (deterministic trees).
inline BestSplit find_best_split(const std::vector<std::vector<double>>& x,
                                 const std::vector<double>& y,
                                 const std::vector<std::size_t>& rows,
                                 std::span<const int> features, int min_node_size,
                                 std::vector<std::pair<double, double>>& scratch) {
    const auto n = rows.size();
    double total = 0.0;
    for (std::size_t r : rows) total += y[r];
    const double parent_score = total * total / static_cast<double>(n);

    BestSplit best;
    for (int j : features) {
        scratch.clear();
        scratch.reserve(n);
        for (std::size_t r : rows)
            scratch.emplace_back(x[r][static_cast<std::size_t>(j)], y[r]);
        std::sort(scratch.begin(), scratch.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        double left_sum = 0.0;
        for (std::size_t k = 1; k < n; ++k) {
            left_sum += scratch[k - 1].second;
            if (scratch[k].first == scratch[k - 1].first) continue;   // not a distinct boundary
            const auto left_n = k;
            const auto right_n = n - k;
            if (left_n < static_cast<std::size_t>(min_node_size) ||
                right_n < static_cast<std::size_t>(min_node_size))
                continue;
            const double right_sum = total - left_sum;
            const double score = left_sum * left_sum / static_cast<double>(left_n) +
                                 right_sum * right_sum / static_cast<double>(right_n);
            const double gain = score - parent_score;
            if (gain > best.gain) {
                best.feature = j;
                best.threshold = 0.5 * (scratch[k - 1].first + scratch[k].first);
                best.gain = gain;
                best.left_count = left_n;
            }
        }
    }
    return best;
}

}  // namespace detail

/// Grows a CART regression tree by recursive greedy SSE splitting. `rng` is
/// only consulted when opts.feature_subset is set (per-split subsampling).
inline RegressionTree fit_cart(const std::vector<std::vector<double>>& x,
                               const std::vector<double>& y,
                               const std::vector<std::size_t>& row_subset,
                               const CartOptions& opts, Rng* rng = nullptr) {
    if (x.empty() || y.empty()) throw DataError("fit_cart: empty data");
    if (x.size() != y.size()) throw DataError("fit_cart: feature/target length mismatch");
    const int n_features = static_cast<int>(x.front().size());
    if (opts.feature_subset &&
        (*opts.feature_subset < 1 || *opts.feature_subset > n_features))
        throw ConfigError("fit_cart: feature_subset out of range");
    if (opts.min_node_size < 1) throw ConfigError("fit_cart: min_node_size must be >= 1");
    if (row_subset.empty()) throw DataError("fit_cart: empty row subset");

    RegressionTree tree;
    tree.min_node_size = opts.min_node_size;

    std::vector<int> all_features(static_cast<std::size_t>(n_features));
    for (int j = 0; j < n_features; ++j) all_features[static_cast<std::size_t>(j)] = j;
    std::vector<int> sampled;
    std::vector<std::pair<double, double>> scratch;

    struct Work {
        int node_id;
        std::vector<std::size_t> rows;   // ascending training-row indices
        int depth;
    };

    auto make_node = [&](const std::vector<std::size_t>& rows) {
        TreeNode node;
        node.count = static_cast<int>(rows.size());
        double sum = 0.0;
        for (std::size_t r : rows) sum += y[r];
        node.value = sum / static_cast<double>(rows.size());
        tree.nodes.push_back(node);
        return static_cast<int>(tree.nodes.size()) - 1;
    };

    std::vector<Work> stack;
    stack.push_back({make_node(row_subset), row_subset, 0});

    while (!stack.empty()) {
        Work work = std::move(stack.back());
        stack.pop_back();
        const auto& rows = work.rows;

        const bool depth_capped = opts.max_depth && work.depth >= *opts.max_depth;
        if (depth_capped || rows.size() < 2 * static_cast<std::size_t>(opts.min_node_size))
            continue;
        double ymin = y[rows.front()], ymax = y[rows.front()];
        for (std::size_t r : rows) {
            ymin = std::min(ymin, y[r]);
            ymax = std::max(ymax, y[r]);
        }
        if (ymin == ymax) continue;   // zero-variance node

        std::span<const int> features = all_features;
        if (opts.feature_subset && *opts.feature_subset < n_features) {
            // partial Fisher-Yates, then sorted so tie-breaking stays by index
            sampled = all_features;
            for (int k = 0; k < *opts.feature_subset; ++k) {
                const auto pick = static_cast<std::size_t>(k) +
                                  rng->uniform_index(sampled.size() - static_cast<std::size_t>(k));
                std::swap(sampled[static_cast<std::size_t>(k)], sampled[pick]);
            }
            sampled.resize(static_cast<std::size_t>(*opts.feature_subset));
            std::sort(sampled.begin(), sampled.end());
            features = sampled;
        }

        const auto split =
            detail::find_best_split(x, y, rows, features, opts.min_node_size, scratch);
        if (split.feature < 0 || split.gain <= 0.0) continue;

        std::vector<std::size_t> left_rows, right_rows;
        left_rows.reserve(split.left_count);
        right_rows.reserve(rows.size() - split.left_count);
        for (std::size_t r : rows) {
            if (x[r][static_cast<std::size_t>(split.feature)] <= split.threshold)
                left_rows.push_back(r);
            else
                right_rows.push_back(r);
        }

        const int left_id = make_node(left_rows);
        const int right_id = make_node(right_rows);
        tree.nodes[static_cast<std::size_t>(work.node_id)].feature = split.feature;
        tree.nodes[static_cast<std::size_t>(work.node_id)].threshold = split.threshold;
        tree.nodes[static_cast<std::size_t>(work.node_id)].left = left_id;
        tree.nodes[static_cast<std::size_t>(work.node_id)].right = right_id;
        stack.push_back({right_id, std::move(right_rows), work.depth + 1});
        stack.push_back({left_id, std::move(left_rows), work.depth + 1});
    }
    return tree;
}

inline RegressionTree fit_cart(const std::vector<std::vector<double>>& x,
                               const std::vector<double>& y, const CartOptions& opts,
                               Rng* rng = nullptr) {
    std::vector<std::size_t> rows(x.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return fit_cart(x, y, rows, opts, rng);
}

// ---------------------------------------------------------------------------
// Ensembles
// ---------------------------------------------------------------------------

enum class EnsembleKind { Bagging, RandomForest, GradientBoosting };

struct TreeEnsemble {
    EnsembleKind kind = EnsembleKind::Bagging;
    std::vector<RegressionTree> trees;
    double init = 0.0;            // gradient boosting initial constant
    double learning_rate = 0.0;   // gradient boosting step size
    std::size_t n_features = 0;

    double predict(std::span<const double> row) const {
        if (row.size() != n_features)
            throw DataError("TreeEnsemble::predict: expected " + std::to_string(n_features) +
                            " features, got " + std::to_string(row.size()));
        if (kind == EnsembleKind::GradientBoosting) {
            double f = init;
            for (const auto& t : trees) f += learning_rate * t.predict(row);
            return f;
        }
        if (trees.empty()) throw DataError("TreeEnsemble::predict: empty ensemble");
        double s = 0.0;
        for (const auto& t : trees) s += t.predict(row);
        return s / static_cast<double>(trees.size());
    }
};

inline double predict_ensemble(const TreeEnsemble& e, std::span<const double> row) {
    return e.predict(row);
}

struct BaggingOptions {
    int trees = 500;
    int min_node_size = 5;
    bool bootstrap = true;                  // test hook: false reuses the full sample
    std::optional<int> feature_split;       // set for random forest
};

namespace detail {

inline std::vector<std::size_t> bootstrap_rows(std::size_t n, Rng& rng) {
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = rng.uniform_index(n);
    std::sort(rows.begin(), rows.end());
    return rows;
}

}  // namespace detail

/// B full-feature trees on i.i.d. bootstrap resamples; prediction is the
/// member mean. Member trees train in parallel on independent sub-streams.
inline TreeEnsemble fit_bagging(const std::vector<std::vector<double>>& x,
                                const std::vector<double>& y, const BaggingOptions& opts,
                                const Rng& rng, int jobs = 0) {
    if (x.empty()) throw DataError("fit_bagging: empty data");
    if (opts.trees < 1) throw ConfigError("fit_bagging: need at least one tree");
    const int n_features = static_cast<int>(x.front().size());
    if (opts.feature_split && (*opts.feature_split < 1 || *opts.feature_split > n_features))
        throw ConfigError("fit_bagging: feature_split out of range");

    TreeEnsemble e;
    e.kind = opts.feature_split ? EnsembleKind::RandomForest : EnsembleKind::Bagging;
    e.n_features = static_cast<std::size_t>(n_features);
    e.trees.resize(static_cast<std::size_t>(opts.trees));

    CartOptions cart;
    cart.min_node_size = opts.min_node_size;
    cart.feature_subset =
        (opts.feature_split && *opts.feature_split < n_features) ? opts.feature_split : std::nullopt;

    parallel_for(static_cast<std::size_t>(opts.trees), jobs, [&](std::size_t b) {
        Rng tree_rng = rng.stream(b);
        Rng boot_rng = tree_rng.stream("bootstrap");
        Rng feat_rng = tree_rng.stream("features");
        std::vector<std::size_t> rows;
        if (opts.bootstrap) {
            rows = detail::bootstrap_rows(x.size(), boot_rng);
        } else {
            rows.resize(x.size());
            for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
        }
        e.trees[b] = fit_cart(x, y, rows, cart, &feat_rng);
    });
    return e;
}

/// Bagging plus per-split uniform feature subsampling. Defaults follow the
/// classic implementation: 500 trees, terminal node size 5, J/3 features.
inline TreeEnsemble fit_random_forest(const std::vector<std::vector<double>>& x,
                                      const std::vector<double>& y, BaggingOptions opts,
                                      const Rng& rng, int jobs = 0) {
    if (x.empty()) throw DataError("fit_random_forest: empty data");
    if (!opts.feature_split) {
        const int j = static_cast<int>(x.front().size());
        opts.feature_split = std::max(1, j / 3);
    }
    TreeEnsemble e = fit_bagging(x, y, opts, rng, jobs);
    e.kind = EnsembleKind::RandomForest;
    return e;
}

struct BoostOptions {
    int trees = 500;
    std::optional<int> depth = 2;   // split levels; nullopt lifts the cap (test hook)
    double learning_rate = 0.1;
    int min_node_size = 1;
};

/// Stagewise additive boosting with squared loss: the fit starts from the
/// sample mean, each stage fits a depth-capped tree to the current residuals
/// (leaf values are then exactly the optimal constants), and predictions
/// accumulate with the learning rate.
inline TreeEnsemble fit_gradient_boosting(const std::vector<std::vector<double>>& x,
                                          const std::vector<double>& y, const BoostOptions& opts,
                                          std::vector<double>* train_mse_per_stage = nullptr,
                                          const std::vector<std::vector<double>>* x_eval = nullptr,
                                          const std::vector<double>* y_eval = nullptr,
                                          std::vector<double>* eval_mse_per_stage = nullptr) {
    if (x.empty()) throw DataError("fit_gradient_boosting: empty data");
    if (opts.trees < 0) throw ConfigError("fit_gradient_boosting: negative tree count");

    TreeEnsemble e;
    e.kind = EnsembleKind::GradientBoosting;
    e.n_features = x.front().size();
    e.learning_rate = opts.learning_rate;
    double init = 0.0;
    for (double v : y) init += v;
    e.init = init / static_cast<double>(y.size());

    CartOptions cart;
    cart.min_node_size = opts.min_node_size;
    cart.max_depth = opts.depth;

    std::vector<double> fit(y.size(), e.init);
    std::vector<double> residual(y.size());
    std::vector<double> eval_fit;
    if (x_eval) eval_fit.assign(x_eval->size(), e.init);

    auto mse = [](const std::vector<double>& truth, const std::vector<double>& pred) {
        double s = 0.0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const double d = truth[i] - pred[i];
            s += d * d;
        }
        return s / static_cast<double>(truth.size());
    };

    for (int b = 0; b < opts.trees; ++b) {
        for (std::size_t i = 0; i < y.size(); ++i) residual[i] = y[i] - fit[i];
        RegressionTree tree = fit_cart(x, residual, cart);
        for (std::size_t i = 0; i < y.size(); ++i)
            fit[i] += opts.learning_rate * tree.predict(x[i]);
        if (x_eval)
            for (std::size_t i = 0; i < x_eval->size(); ++i)
                eval_fit[i] += opts.learning_rate * tree.predict((*x_eval)[i]);
        e.trees.push_back(std::move(tree));
        if (train_mse_per_stage) train_mse_per_stage->push_back(mse(y, fit));
        if (eval_mse_per_stage && y_eval) eval_mse_per_stage->push_back(mse(*y_eval, eval_fit));
    }
    return e;
}

/// First `k` boosting stages of an already fitted ensemble.
inline TreeEnsemble truncate_boosting(const TreeEnsemble& e, std::size_t k) {
    if (e.kind != EnsembleKind::GradientBoosting)
        throw ConfigError("truncate_boosting: not a boosting ensemble");
    if (k > e.trees.size()) throw ConfigError("truncate_boosting: k exceeds fitted stages");
    TreeEnsemble out = e;
    out.trees.resize(k);
    return out;
}

}  // namespace volaforge
