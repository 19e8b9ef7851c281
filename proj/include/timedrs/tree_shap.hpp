#pragma once
// Exact path-dependent Shapley attributions for tree ensembles, computed in
// polynomial time by propagating the subset-permutation weight polynomial
// along each root-to-leaf path. Node covers (training hessian sums) supply
// the conditional branch probabilities, so trained models carry them.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "timedrs/boosting.hpp"

namespace timedrs {

struct ShapRow {
    std::string patient_id;
    std::vector<double> phi;  // one attribution per feature column
    double base_value = 0.0;  // expected ensemble output
};

namespace detail {

struct PathElement {
    int feature = -1;
    double zero_fraction = 1.0;
    double one_fraction = 1.0;
    double pweight = 0.0;
};

inline void extend_path(std::vector<PathElement>& path, double zero_fraction,
                        double one_fraction, int feature) {
    const int d = static_cast<int>(path.size());
    path.push_back({feature, zero_fraction, one_fraction, d == 0 ? 1.0 : 0.0});
    for (int i = d - 1; i >= 0; --i) {
        path[static_cast<std::size_t>(i) + 1].pweight +=
            one_fraction * path[static_cast<std::size_t>(i)].pweight * (i + 1) /
            static_cast<double>(d + 1);
        path[static_cast<std::size_t>(i)].pweight =
            zero_fraction * path[static_cast<std::size_t>(i)].pweight * (d - i) /
            static_cast<double>(d + 1);
    }
}

inline double unwound_path_sum(const std::vector<PathElement>& path, int index) {
    const int d = static_cast<int>(path.size()) - 1;
    const double one_fraction = path[static_cast<std::size_t>(index)].one_fraction;
    const double zero_fraction = path[static_cast<std::size_t>(index)].zero_fraction;
    double next_one_portion = path[static_cast<std::size_t>(d)].pweight;
    double total = 0.0;
    for (int i = d - 1; i >= 0; --i) {
        if (one_fraction != 0.0) {
            const double tmp = next_one_portion * (d + 1) /
                               (static_cast<double>(i + 1) * one_fraction);
            total += tmp;
            next_one_portion = path[static_cast<std::size_t>(i)].pweight -
                               tmp * zero_fraction * (d - i) / static_cast<double>(d + 1);
        } else if (zero_fraction != 0.0) {
            total += (path[static_cast<std::size_t>(i)].pweight / zero_fraction) /
                     ((d - i) / static_cast<double>(d + 1));
        }
    }
    return total;
}

inline void unwind_path(std::vector<PathElement>& path, int index) {
    const int d = static_cast<int>(path.size()) - 1;
    const double one_fraction = path[static_cast<std::size_t>(index)].one_fraction;
    const double zero_fraction = path[static_cast<std::size_t>(index)].zero_fraction;
    double next_one_portion = path[static_cast<std::size_t>(d)].pweight;
    for (int i = d - 1; i >= 0; --i) {
        if (one_fraction != 0.0) {
            const double tmp = path[static_cast<std::size_t>(i)].pweight;
            path[static_cast<std::size_t>(i)].pweight =
                next_one_portion * (d + 1) / (static_cast<double>(i + 1) * one_fraction);
            next_one_portion = tmp - path[static_cast<std::size_t>(i)].pweight * zero_fraction *
                                         (d - i) / static_cast<double>(d + 1);
        } else {
            path[static_cast<std::size_t>(i)].pweight =
                path[static_cast<std::size_t>(i)].pweight * (d + 1) /
                (zero_fraction * (d - i));
        }
    }
    for (int i = index; i < d; ++i) {
        path[static_cast<std::size_t>(i)].feature = path[static_cast<std::size_t>(i) + 1].feature;
        path[static_cast<std::size_t>(i)].zero_fraction =
            path[static_cast<std::size_t>(i) + 1].zero_fraction;
        path[static_cast<std::size_t>(i)].one_fraction =
            path[static_cast<std::size_t>(i) + 1].one_fraction;
    }
    path.pop_back();
}

inline void shap_recurse(const Tree& tree, std::span<const double> x, std::span<double> phi,
                         int node_id, std::vector<PathElement> path, double zero_fraction,
                         double one_fraction, int feature) {
    extend_path(path, zero_fraction, one_fraction, feature);
    const TreeNode& nd = tree.nodes[static_cast<std::size_t>(node_id)];

    if (nd.is_leaf()) {
        for (int i = 1; i < static_cast<int>(path.size()); ++i) {
            const double w = unwound_path_sum(path, i);
            const PathElement& el = path[static_cast<std::size_t>(i)];
            phi[static_cast<std::size_t>(el.feature)] +=
                w * (el.one_fraction - el.zero_fraction) * nd.weight;
        }
        return;
    }

    const double v = x[static_cast<std::size_t>(nd.feature)];
    const bool goes_left = std::isnan(v) ? nd.default_left : v < nd.threshold;
    const int hot = goes_left ? nd.left : nd.right;
    const int cold = goes_left ? nd.right : nd.left;
    const double cover = nd.cover > 0.0 ? nd.cover : 1.0;
    const double hot_zero = tree.nodes[static_cast<std::size_t>(hot)].cover / cover;
    const double cold_zero = tree.nodes[static_cast<std::size_t>(cold)].cover / cover;

    double incoming_zero = 1.0, incoming_one = 1.0;
    for (int k = 1; k < static_cast<int>(path.size()); ++k) {
        if (path[static_cast<std::size_t>(k)].feature == nd.feature) {
            incoming_zero = path[static_cast<std::size_t>(k)].zero_fraction;
            incoming_one = path[static_cast<std::size_t>(k)].one_fraction;
            unwind_path(path, k);
            break;
        }
    }

    shap_recurse(tree, x, phi, hot, path, incoming_zero * hot_zero, incoming_one, nd.feature);
    shap_recurse(tree, x, phi, cold, path, incoming_zero * cold_zero, 0.0, nd.feature);
}

inline double expected_value_node(const Tree& tree, int node_id) {
    const TreeNode& nd = tree.nodes[static_cast<std::size_t>(node_id)];
    if (nd.is_leaf()) return nd.weight;
    const double cover = nd.cover > 0.0 ? nd.cover : 1.0;
    return (tree.nodes[static_cast<std::size_t>(nd.left)].cover *
                expected_value_node(tree, nd.left) +
            tree.nodes[static_cast<std::size_t>(nd.right)].cover *
                expected_value_node(tree, nd.right)) /
           cover;
}

} // namespace detail

// Cover-weighted mean of the tree's leaves: the path-dependent expectation.
inline double tree_expected_value(const Tree& tree) {
    return detail::expected_value_node(tree, 0);
}

// Adds one tree's (unscaled) attributions into phi.
inline void tree_shap(const Tree& tree, std::span<const double> x, std::span<double> phi) {
    detail::shap_recurse(tree, x, phi, 0, {}, 1.0, 1.0, -1);
}

inline std::vector<ShapRow> shap_values(const TreeEnsemble& ensemble, const FeatureMatrix& x,
                                        std::span<const std::string> patient_ids) {
    if (!patient_ids.empty() && static_cast<int>(patient_ids.size()) != x.rows)
        throw ValidationError("patient id count does not match feature rows");

    double base = ensemble.base_score;
    for (std::size_t m = 0; m < ensemble.trees.size(); ++m)
        base += ensemble.shrinkage[m] * tree_expected_value(ensemble.trees[m]);

    std::vector<ShapRow> rows;
    rows.reserve(static_cast<std::size_t>(x.rows));
    std::vector<double> phi(static_cast<std::size_t>(x.cols));
    for (int r = 0; r < x.rows; ++r) {
        ShapRow row;
        row.patient_id = patient_ids.empty() ? std::to_string(r)
                                             : patient_ids[static_cast<std::size_t>(r)];
        row.base_value = base;
        row.phi.assign(static_cast<std::size_t>(x.cols), 0.0);
        for (std::size_t m = 0; m < ensemble.trees.size(); ++m) {
            std::fill(phi.begin(), phi.end(), 0.0);
            tree_shap(ensemble.trees[m], x.row(r), phi);
            for (int c = 0; c < x.cols; ++c)
                row.phi[static_cast<std::size_t>(c)] +=
                    ensemble.shrinkage[m] * phi[static_cast<std::size_t>(c)];
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

struct ShapSummary {
    struct FeatureImportance {
        int feature = 0;
        double mean_abs_phi = 0.0;
    };
    struct Dot {
        int feature = 0;
        int row = 0;
        double feature_value = 0.0;
        double percentile = 0.0; // rank of the value within the population, 0..100
        double phi = 0.0;
    };
    std::vector<FeatureImportance> ranking; // descending mean |phi|
    std::vector<Dot> dots;
};

inline ShapSummary shap_summary(std::span<const ShapRow> rows, const FeatureMatrix& x) {
    if (rows.empty()) throw ValidationError("shap_summary needs at least one row");
    if (static_cast<int>(rows.size()) != x.rows)
        throw ValidationError("shap rows do not match feature rows");
    const int n = x.rows, f = x.cols;

    ShapSummary summary;
    for (int c = 0; c < f; ++c) {
        double acc = 0.0;
        for (int r = 0; r < n; ++r)
            acc += std::fabs(rows[static_cast<std::size_t>(r)].phi[static_cast<std::size_t>(c)]);
        summary.ranking.push_back({c, acc / static_cast<double>(n)});
    }
    std::stable_sort(summary.ranking.begin(), summary.ranking.end(),
                     [](const auto& a, const auto& b) { return a.mean_abs_phi > b.mean_abs_phi; });

    std::vector<double> column(static_cast<std::size_t>(n));
    for (int c = 0; c < f; ++c) {
        for (int r = 0; r < n; ++r) column[static_cast<std::size_t>(r)] = x.at(r, c);
        std::vector<double> sorted = column;
        std::sort(sorted.begin(), sorted.end());
        for (int r = 0; r < n; ++r) {
            const double v = column[static_cast<std::size_t>(r)];
            const auto lo = std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin();
            const auto hi = std::upper_bound(sorted.begin(), sorted.end(), v) - sorted.begin();
            const double midrank = 0.5 * static_cast<double>(lo + hi);
            summary.dots.push_back(
                {c, r, v, 100.0 * midrank / static_cast<double>(n),
                 rows[static_cast<std::size_t>(r)].phi[static_cast<std::size_t>(c)]});
        }
    }
    return summary;
}

} // namespace timedrs
