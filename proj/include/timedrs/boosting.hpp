#pragma once
// Gradient-boosted decision trees with second-order updates on the Cox
// partial likelihood. Exact greedy split search over sorted feature values,
// L1/L2-regularised leaf weights, learned default directions for missing
// values, row subsampling, per-tree/level/node column subsampling, and the
// gbtree / dart boosters. Training is single-threaded and bitwise
// deterministic for a fixed seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "timedrs/cox.hpp"
#include "timedrs/rng.hpp"
#include "timedrs/types.hpp"

namespace timedrs {

struct FeatureMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data; // row-major

    double at(int r, int c) const {
        return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
                    static_cast<std::size_t>(c)];
    }

    std::span<const double> row(int r) const {
        return {data.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols),
                static_cast<std::size_t>(cols)};
    }

    static FeatureMatrix from_vectors(std::span<const FeatureVector> features) {
        FeatureMatrix m;
        m.rows = static_cast<int>(features.size());
        m.cols = kNumPhenotypes;
        m.data.reserve(static_cast<std::size_t>(m.rows) * kNumPhenotypes);
        for (const auto& f : features)
            m.data.insert(m.data.end(), f.values.begin(), f.values.end());
        return m;
    }
};

enum class BoosterKind { Gbtree, Dart };

inline const char* booster_name(BoosterKind b) {
    return b == BoosterKind::Gbtree ? "gbtree" : "dart";
}

inline BoosterKind parse_booster(const std::string& s) {
    if (s == "gbtree") return BoosterKind::Gbtree;
    if (s == "dart") return BoosterKind::Dart;
    throw ParseError("unknown booster '" + s + "'");
}

struct BoostingConfig {
    int num_boost_round = 64;
    double learning_rate = 0.05;
    int max_depth = 4;
    double subsample = 1.0;
    double colsample_bytree = 1.0;
    double colsample_bylevel = 1.0;
    double colsample_bynode = 1.0;
    double min_child_weight = 0.1;
    double reg_lambda = 1.0;
    double reg_alpha = 0.0;
    BoosterKind booster = BoosterKind::Gbtree;
    double rate_drop = 0.0;
    std::uint64_t rng_seed = 0;
};

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    bool default_left = true; // route for missing (NaN) values
    double weight = 0.0;      // leaf value, unscaled
    double cover = 0.0;       // hessian sum of training rows through this node

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes; // nodes[0] is the root

    double predict(std::span<const double> x) const {
        int i = 0;
        while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
            const TreeNode& nd = nodes[static_cast<std::size_t>(i)];
            const double v = x[static_cast<std::size_t>(nd.feature)];
            if (std::isnan(v))
                i = nd.default_left ? nd.left : nd.right;
            else
                i = v < nd.threshold ? nd.left : nd.right;
        }
        return nodes[static_cast<std::size_t>(i)].weight;
    }
};

struct TreeEnsemble {
    double base_score = 0.0;
    std::vector<Tree> trees;
    std::vector<double> shrinkage; // per-tree multiplier on raw leaf weights
    BoostingConfig config;

    double predict(std::span<const double> x) const {
        double f = base_score;
        for (std::size_t m = 0; m < trees.size(); ++m) f += shrinkage[m] * trees[m].predict(x);
        return f;
    }
};

namespace detail {

inline double l1_threshold(double g, double alpha) {
    if (g > alpha) return g - alpha;
    if (g < -alpha) return g + alpha;
    return 0.0;
}

inline double leaf_objective(double g, double h, double lambda, double alpha) {
    const double t = l1_threshold(g, alpha);
    const double denom = h + lambda;
    return denom > 0.0 ? t * t / denom : 0.0;
}

inline double leaf_weight(double g, double h, double lambda, double alpha) {
    const double denom = h + lambda;
    return denom > 0.0 ? -l1_threshold(g, alpha) / denom : 0.0;
}

// ceil(frac * n), clamped to [1, n]
inline int sample_size(double frac, int n) {
    if (frac >= 1.0) return n;
    const int k = static_cast<int>(std::ceil(frac * n - 1e-9));
    return std::clamp(k, 1, n);
}

class TreeBuilder {
public:
    TreeBuilder(const FeatureMatrix& x, std::span<const double> grad,
                std::span<const double> hess, const BoostingConfig& cfg, Rng& rng)
        : x_(x), grad_(grad), hess_(hess), cfg_(cfg), rng_(rng) {}

    Tree build(const std::vector<int>& rows) {
        Tree tree;
        if (rows.empty()) {
            tree.nodes.push_back(TreeNode{});
            return tree;
        }

        // Column sampling is cumulative: per-tree, then per-level from the
        // tree set, then per-node from the level set.
        std::vector<int> tree_features;
        if (cfg_.colsample_bytree < 1.0)
            tree_features = sample_without_replacement(
                x_.cols, sample_size(cfg_.colsample_bytree, x_.cols), rng_);
        else
            for (int f = 0; f < x_.cols; ++f) tree_features.push_back(f);

        level_features_.assign(static_cast<std::size_t>(std::max(cfg_.max_depth, 0)), {});
        for (auto& level : level_features_) {
            if (cfg_.colsample_bylevel < 1.0) {
                const int k = sample_size(cfg_.colsample_bylevel,
                                          static_cast<int>(tree_features.size()));
                const auto picks = sample_without_replacement(
                    static_cast<int>(tree_features.size()), k, rng_);
                for (const int p : picks)
                    level.push_back(tree_features[static_cast<std::size_t>(p)]);
            } else {
                level = tree_features;
            }
        }

        nodes_.clear();
        expand(rows, 0);
        tree.nodes = std::move(nodes_);
        return tree;
    }

private:
    struct SplitDecision {
        double gain = 0.0;
        int feature = -1;
        double threshold = 0.0;
        bool default_left = true;
    };

    int expand(const std::vector<int>& rows, int depth) {
        double g_total = 0.0, h_total = 0.0;
        for (const int r : rows) {
            g_total += grad_[static_cast<std::size_t>(r)];
            h_total += hess_[static_cast<std::size_t>(r)];
        }

        const int node_id = static_cast<int>(nodes_.size());
        nodes_.push_back(TreeNode{});
        nodes_[static_cast<std::size_t>(node_id)].cover = h_total;

        SplitDecision best;
        if (depth < cfg_.max_depth)
            best = find_split(rows, depth, g_total, h_total);

        if (best.feature < 0) {
            nodes_[static_cast<std::size_t>(node_id)].weight =
                leaf_weight(g_total, h_total, cfg_.reg_lambda, cfg_.reg_alpha);
            return node_id;
        }

        std::vector<int> left_rows, right_rows;
        for (const int r : rows) {
            const double v = x_.at(r, best.feature);
            bool goes_left;
            if (std::isnan(v))
                goes_left = best.default_left;
            else
                goes_left = v < best.threshold;
            (goes_left ? left_rows : right_rows).push_back(r);
        }

        const int left_id = expand(left_rows, depth + 1);
        const int right_id = expand(right_rows, depth + 1);
        TreeNode& nd = nodes_[static_cast<std::size_t>(node_id)];
        nd.feature = best.feature;
        nd.threshold = best.threshold;
        nd.default_left = best.default_left;
        nd.left = left_id;
        nd.right = right_id;
        return node_id;
    }

    SplitDecision find_split(const std::vector<int>& rows, int depth, double g_total,
                             double h_total) {
        SplitDecision best;
        const double parent_obj =
            leaf_objective(g_total, h_total, cfg_.reg_lambda, cfg_.reg_alpha);

        const std::vector<int>& level_set = level_features_[static_cast<std::size_t>(depth)];
        std::vector<int> node_features;
        if (cfg_.colsample_bynode < 1.0) {
            const int k =
                sample_size(cfg_.colsample_bynode, static_cast<int>(level_set.size()));
            const auto picks =
                sample_without_replacement(static_cast<int>(level_set.size()), k, rng_);
            for (const int p : picks)
                node_features.push_back(level_set[static_cast<std::size_t>(p)]);
        } else {
            node_features = level_set;
        }

        for (const int f : node_features) {
            sorted_.clear();
            double g_missing = 0.0, h_missing = 0.0;
            for (const int r : rows) {
                const double v = x_.at(r, f);
                if (std::isnan(v)) {
                    g_missing += grad_[static_cast<std::size_t>(r)];
                    h_missing += hess_[static_cast<std::size_t>(r)];
                } else {
                    sorted_.push_back({v, grad_[static_cast<std::size_t>(r)],
                                       hess_[static_cast<std::size_t>(r)]});
                }
            }
            if (sorted_.size() < 2) continue;
            std::sort(sorted_.begin(), sorted_.end(),
                      [](const Entry& a, const Entry& b) { return a.value < b.value; });

            double g_prefix = 0.0, h_prefix = 0.0;
            for (std::size_t k = 0; k + 1 < sorted_.size(); ++k) {
                g_prefix += sorted_[k].grad;
                h_prefix += sorted_[k].hess;
                if (sorted_[k].value == sorted_[k + 1].value) continue;
                const double threshold = 0.5 * (sorted_[k].value + sorted_[k + 1].value);
                // missing left first so that gain ties keep default_left = true
                consider(best, f, threshold, true, g_prefix + g_missing, h_prefix + h_missing,
                         g_total, h_total, parent_obj);
                consider(best, f, threshold, false, g_prefix, h_prefix, g_total, h_total,
                         parent_obj);
            }
        }
        return best;
    }

    void consider(SplitDecision& best, int feature, double threshold, bool default_left,
                  double g_left, double h_left, double g_total, double h_total,
                  double parent_obj) {
        const double g_right = g_total - g_left;
        const double h_right = h_total - h_left;
        if (h_left < cfg_.min_child_weight || h_right < cfg_.min_child_weight) return;
        const double gain = leaf_objective(g_left, h_left, cfg_.reg_lambda, cfg_.reg_alpha) +
                            leaf_objective(g_right, h_right, cfg_.reg_lambda, cfg_.reg_alpha) -
                            parent_obj;
        if (gain > best.gain + 1e-12 && gain > 1e-12) {
            best.gain = gain;
            best.feature = feature;
            best.threshold = threshold;
            best.default_left = default_left;
        }
    }

    struct Entry {
        double value;
        double grad;
        double hess;
    };

    const FeatureMatrix& x_;
    std::span<const double> grad_;
    std::span<const double> hess_;
    const BoostingConfig& cfg_;
    Rng& rng_;
    std::vector<TreeNode> nodes_;
    std::vector<std::vector<int>> level_features_;
    std::vector<Entry> sorted_;
};

} // namespace detail

// Trains num_boost_round trees. With the dart booster, each round drops every
// prior tree independently with probability rate_drop, fits the new tree
// against the reduced model, and renormalises with the "tree" scheme: the new
// tree enters at eta / (k + eta) and each dropped tree is scaled by
// k / (k + eta), k being the number dropped. A round that drops nothing
// behaves exactly like gbtree.
inline TreeEnsemble train(const FeatureMatrix& x, const CoxObjectiveState& state,
                          const BoostingConfig& cfg) {
    if (x.rows != state.n()) throw ValidationError("feature matrix and survival state disagree");
    if (x.rows < 2) throw InsufficientDataError("training needs at least 2 samples");
    if (cfg.num_boost_round < 0 || cfg.learning_rate <= 0.0 || cfg.max_depth < 0 ||
        cfg.reg_lambda < 0.0 || cfg.reg_alpha < 0.0)
        throw ValidationError("invalid boosting configuration");

    const int n = x.rows;
    TreeEnsemble out;
    out.base_score = 0.0;
    out.config = cfg;

    Rng rng(cfg.rng_seed);
    std::vector<double> margin(static_cast<std::size_t>(n), out.base_score);
    std::vector<double> eval_margin(static_cast<std::size_t>(n));
    std::vector<std::vector<double>> raw; // per-tree raw predictions (dart bookkeeping)
    const bool dart = cfg.booster == BoosterKind::Dart;

    std::vector<double> grad(static_cast<std::size_t>(n)), hess(static_cast<std::size_t>(n));
    std::vector<int> rows;
    std::vector<int> dropped;

    for (int round = 0; round < cfg.num_boost_round; ++round) {
        dropped.clear();
        const double* margin_ptr = margin.data();
        if (dart && !out.trees.empty()) {
            for (std::size_t t = 0; t < out.trees.size(); ++t)
                if (rng.bernoulli(cfg.rate_drop)) dropped.push_back(static_cast<int>(t));
            if (!dropped.empty()) {
                for (int i = 0; i < n; ++i) {
                    double f = out.base_score;
                    std::size_t next_drop = 0;
                    for (std::size_t t = 0; t < out.trees.size(); ++t) {
                        if (next_drop < dropped.size() &&
                            static_cast<std::size_t>(dropped[next_drop]) == t) {
                            ++next_drop;
                            continue;
                        }
                        f += out.shrinkage[t] * raw[t][static_cast<std::size_t>(i)];
                    }
                    eval_margin[static_cast<std::size_t>(i)] = f;
                }
                margin_ptr = eval_margin.data();
            }
        }

        state.gradient_hessian(std::span<const double>(margin_ptr, static_cast<std::size_t>(n)),
                               grad, hess);

        rows.clear();
        if (cfg.subsample < 1.0) {
            for (int i = 0; i < n; ++i)
                if (rng.bernoulli(cfg.subsample)) rows.push_back(i);
            if (rows.empty())
                for (int i = 0; i < n; ++i) rows.push_back(i);
        } else {
            for (int i = 0; i < n; ++i) rows.push_back(i);
        }

        detail::TreeBuilder builder(x, grad, hess, cfg, rng);
        Tree tree = builder.build(rows);

        double beta = cfg.learning_rate;
        if (dart && !dropped.empty()) {
            const double k = static_cast<double>(dropped.size());
            beta = cfg.learning_rate / (k + cfg.learning_rate);
            const double factor = k / (k + cfg.learning_rate);
            for (const int t : dropped) out.shrinkage[static_cast<std::size_t>(t)] *= factor;
        }

        std::vector<double> tree_raw(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) tree_raw[static_cast<std::size_t>(i)] = tree.predict(x.row(i));

        out.trees.push_back(std::move(tree));
        out.shrinkage.push_back(beta);
        raw.push_back(std::move(tree_raw));

        if (dart && !dropped.empty()) {
            // dropped-tree weights changed; rebuild the cached margin
            for (int i = 0; i < n; ++i) {
                double f = out.base_score;
                for (std::size_t t = 0; t < out.trees.size(); ++t)
                    f += out.shrinkage[t] * raw[t][static_cast<std::size_t>(i)];
                margin[static_cast<std::size_t>(i)] = f;
            }
        } else {
            for (int i = 0; i < n; ++i)
                margin[static_cast<std::size_t>(i)] += beta * raw.back()[static_cast<std::size_t>(i)];
        }
    }
    return out;
}

} // namespace timedrs
