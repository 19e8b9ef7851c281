#pragma once
// Upstream-quality metrics: Sorensen-Dice overlap for masks and centroid
// detection F1 via minimum-cost bipartite assignment with a distance gate
// applied after the assignment (gated pairs become FP + FN).

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "timedrs/types.hpp"

namespace timedrs {

inline double dice(const RegionMask& a, const RegionMask& b) {
    if (a.width != b.width || a.height != b.height)
        throw ValidationError("dice requires identical grid dimensions");
    if (a.pixel_size_um != b.pixel_size_um)
        throw ValidationError("dice requires identical pixel size");
    std::size_t inter = 0, total = 0;
    for (std::size_t i = 0; i < a.grid.size(); ++i) {
        const bool va = a.grid[i] != 0, vb = b.grid[i] != 0;
        inter += va && vb;
        total += va;
        total += vb;
    }
    if (total == 0) return 1.0; // both empty
    return 2.0 * static_cast<double>(inter) / static_cast<double>(total);
}

// Minimum-cost perfect assignment on a square cost matrix (Kuhn-Munkres with
// potentials, O(n^3)). Returns row -> column.
inline std::vector<int> hungarian_assignment(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    for (const auto& row : cost)
        if (static_cast<int>(row.size()) != n)
            throw ValidationError("assignment cost matrix must be square");
    if (n == 0) return {};

    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);

    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, false);
        do {
            used[static_cast<std::size_t>(j0)] = true;
            const int i0 = p[static_cast<std::size_t>(j0)];
            int j1 = 0;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                                   u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j)
        if (p[static_cast<std::size_t>(j)] > 0)
            row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
    return row_to_col;
}

inline double assignment_cost(const std::vector<std::vector<double>>& cost,
                              const std::vector<int>& row_to_col) {
    double total = 0.0;
    for (std::size_t i = 0; i < row_to_col.size(); ++i)
        total += cost[i][static_cast<std::size_t>(row_to_col[i])];
    return total;
}

struct MatchReport {
    int true_positive = 0;
    int false_positive = 0;
    int false_negative = 0;
    double f1 = 0.0;
    struct Pair {
        int predicted = -1;
        int truth = -1;
        double distance_um = 0.0;
    };
    std::vector<Pair> pairs; // surviving (gated-in) pairs
};

inline MatchReport detection_f1(std::span<const Point2> predicted, std::span<const Point2> truth,
                                double gate_um = 3.0) {
    for (const auto& p : predicted)
        if (!is_finite(p)) throw ValidationError("predicted centroid is not finite");
    for (const auto& p : truth)
        if (!is_finite(p)) throw ValidationError("truth centroid is not finite");

    const int np = static_cast<int>(predicted.size());
    const int nt = static_cast<int>(truth.size());
    MatchReport report;
    if (np == 0 && nt == 0) {
        report.f1 = 1.0;
        return report;
    }

    if (np > 0 && nt > 0) {
        // pad the smaller side with zero-cost dummies; every perfect matching
        // uses each dummy exactly once, so the real pairs stay optimal
        const int n = std::max(np, nt);
        std::vector<std::vector<double>> cost(static_cast<std::size_t>(n),
                                              std::vector<double>(static_cast<std::size_t>(n), 0.0));
        for (int i = 0; i < np; ++i) {
            for (int j = 0; j < nt; ++j) {
                const double dx = predicted[static_cast<std::size_t>(i)].x - truth[static_cast<std::size_t>(j)].x;
                const double dy = predicted[static_cast<std::size_t>(i)].y - truth[static_cast<std::size_t>(j)].y;
                cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = std::sqrt(dx * dx + dy * dy);
            }
        }
        const auto row_to_col = hungarian_assignment(cost);
        for (int i = 0; i < np; ++i) {
            const int j = row_to_col[static_cast<std::size_t>(i)];
            if (j >= nt) continue; // matched a dummy column
            const double d = cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            if (d <= gate_um) report.pairs.push_back({i, j, d});
        }
    }

    report.true_positive = static_cast<int>(report.pairs.size());
    report.false_positive = np - report.true_positive;
    report.false_negative = nt - report.true_positive;
    const double denom = 2.0 * report.true_positive + report.false_positive + report.false_negative;
    report.f1 = denom > 0.0 ? 2.0 * report.true_positive / denom : 1.0;
    return report;
}

} // namespace timedrs
