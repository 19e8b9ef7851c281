#pragma once
// Rigid alignment of keypoint sets: mutual-nearest-neighbour descriptor
// matching, RANSAC over two-point hypotheses with a closed-form
// rotation+translation refit, and transform application to nuclei.

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "timedrs/common.hpp"
#include "timedrs/rng.hpp"
#include "timedrs/types.hpp"

namespace timedrs {

struct Keypoint {
    Point2 position_um{};
    std::vector<double> descriptor;
};

struct RigidTransform {
    double rotation_rad = 0.0;
    Point2 translation_um{};

    Point2 apply(const Point2& p) const {
        const double c = std::cos(rotation_rad);
        const double s = std::sin(rotation_rad);
        return {c * p.x - s * p.y + translation_um.x, s * p.x + c * p.y + translation_um.y};
    }

    RigidTransform inverse() const {
        const double c = std::cos(rotation_rad);
        const double s = std::sin(rotation_rad);
        // R^-1 t = (c x + s y, -s x + c y) for the rotation-only inverse
        return {-rotation_rad,
                {-(c * translation_um.x + s * translation_um.y),
                 -(-s * translation_um.x + c * translation_um.y)}};
    }
};

struct RansacConfig {
    double inlier_threshold_um = 16.0;
    int max_iterations = 2000;
    int min_inliers = 2;
    std::uint64_t rng_seed = 0;
};

struct PointPair {
    Point2 source{};
    Point2 target{};
};

namespace detail {

inline double descriptor_dist2(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

// Closed-form least-squares rotation+translation (orthogonal Procrustes
// restricted to rotations, so reflections are excluded).
inline RigidTransform fit_rigid(std::span<const PointPair> pairs, std::span<const int> subset) {
    Point2 src_mean{}, dst_mean{};
    const double n = static_cast<double>(subset.size());
    for (const int i : subset) {
        src_mean.x += pairs[static_cast<std::size_t>(i)].source.x;
        src_mean.y += pairs[static_cast<std::size_t>(i)].source.y;
        dst_mean.x += pairs[static_cast<std::size_t>(i)].target.x;
        dst_mean.y += pairs[static_cast<std::size_t>(i)].target.y;
    }
    src_mean.x /= n;
    src_mean.y /= n;
    dst_mean.x /= n;
    dst_mean.y /= n;

    double dot = 0.0, cross = 0.0;
    for (const int i : subset) {
        const double px = pairs[static_cast<std::size_t>(i)].source.x - src_mean.x;
        const double py = pairs[static_cast<std::size_t>(i)].source.y - src_mean.y;
        const double qx = pairs[static_cast<std::size_t>(i)].target.x - dst_mean.x;
        const double qy = pairs[static_cast<std::size_t>(i)].target.y - dst_mean.y;
        dot += px * qx + py * qy;
        cross += px * qy - py * qx;
    }
    RigidTransform t;
    t.rotation_rad = (dot == 0.0 && cross == 0.0) ? 0.0 : std::atan2(cross, dot);
    const double c = std::cos(t.rotation_rad);
    const double s = std::sin(t.rotation_rad);
    t.translation_um = {dst_mean.x - (c * src_mean.x - s * src_mean.y),
                        dst_mean.y - (s * src_mean.x + c * src_mean.y)};
    return t;
}

inline double residual2(const RigidTransform& t, const PointPair& p) {
    const Point2 moved = t.apply(p.source);
    const double dx = moved.x - p.target.x;
    const double dy = moved.y - p.target.y;
    return dx * dx + dy * dy;
}

} // namespace detail

// Mutual nearest neighbours under Euclidean descriptor distance; ties break
// toward the lowest index. Each index appears at most once per side.
inline std::vector<std::pair<int, int>> match_keypoints(std::span<const Keypoint> source,
                                                        std::span<const Keypoint> target) {
    if (source.empty() || target.empty())
        throw ValidationError("keypoint sets must be non-empty");
    const std::size_t dim = source[0].descriptor.size();
    for (const auto& k : source)
        if (k.descriptor.size() != dim)
            throw ValidationError("descriptor length mismatch within source set");
    for (const auto& k : target)
        if (k.descriptor.size() != dim)
            throw ValidationError("descriptor length mismatch between keypoint sets");

    std::vector<int> nn_src(source.size(), -1);
    for (std::size_t i = 0; i < source.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < target.size(); ++j) {
            const double d = detail::descriptor_dist2(source[i].descriptor, target[j].descriptor);
            if (d < best) {
                best = d;
                nn_src[i] = static_cast<int>(j);
            }
        }
    }
    std::vector<int> nn_dst(target.size(), -1);
    for (std::size_t j = 0; j < target.size(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < source.size(); ++i) {
            const double d = detail::descriptor_dist2(source[i].descriptor, target[j].descriptor);
            if (d < best) {
                best = d;
                nn_dst[j] = static_cast<int>(i);
            }
        }
    }
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t i = 0; i < source.size(); ++i) {
        const int j = nn_src[i];
        if (j >= 0 && nn_dst[static_cast<std::size_t>(j)] == static_cast<int>(i))
            pairs.emplace_back(static_cast<int>(i), j);
    }
    return pairs;
}

struct RigidFit {
    RigidTransform transform;
    std::vector<std::uint8_t> inliers;
    int inlier_count = 0;
    double rms_residual_um = 0.0;
};

// RANSAC with two-point hypotheses; the winning consensus set is refit by
// least squares and the inlier set iterated to a fixed point, so the returned
// mask is consistent with the returned transform.
inline RigidFit estimate_rigid(std::span<const PointPair> pairs, const RansacConfig& cfg) {
    const int n = static_cast<int>(pairs.size());
    if (n < 2) throw InsufficientDataError("rigid estimation needs at least 2 point pairs");
    if (cfg.inlier_threshold_um <= 0.0 || cfg.max_iterations < 1 || cfg.min_inliers < 2)
        throw ValidationError("invalid RANSAC configuration");

    const double thr2 = cfg.inlier_threshold_um * cfg.inlier_threshold_um;
    Rng rng(cfg.rng_seed);

    int best_count = -1;
    std::vector<std::uint8_t> best_mask(pairs.size(), 0);
    std::vector<std::uint8_t> mask(pairs.size(), 0);

    for (int it = 0; it < cfg.max_iterations && best_count < n; ++it) {
        const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)));
        if (b >= a) ++b;
        const double sx = pairs[static_cast<std::size_t>(a)].source.x -
                          pairs[static_cast<std::size_t>(b)].source.x;
        const double sy = pairs[static_cast<std::size_t>(a)].source.y -
                          pairs[static_cast<std::size_t>(b)].source.y;
        if (sx * sx + sy * sy < 1e-18) continue; // degenerate sample
        const std::array<int, 2> sample{a, b};
        const RigidTransform hyp = detail::fit_rigid(pairs, sample);
        int count = 0;
        for (int i = 0; i < n; ++i) {
            const bool in = detail::residual2(hyp, pairs[static_cast<std::size_t>(i)]) <= thr2;
            mask[static_cast<std::size_t>(i)] = in;
            count += in;
        }
        if (count > best_count) {
            best_count = count;
            best_mask = mask;
        }
    }

    if (best_count < std::max(2, cfg.min_inliers))
        throw RegistrationFailedError("RANSAC consensus below min_inliers (" +
                                      std::to_string(best_count < 0 ? 0 : best_count) + " < " +
                                      std::to_string(cfg.min_inliers) + ")");

    // Refit on the consensus set until the inlier set stabilises.
    RigidFit fit;
    fit.inliers = best_mask;
    std::vector<int> subset;
    for (int round = 0; round < 20; ++round) {
        subset.clear();
        for (int i = 0; i < n; ++i)
            if (fit.inliers[static_cast<std::size_t>(i)]) subset.push_back(i);
        fit.transform = detail::fit_rigid(pairs, subset);
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            const bool in =
                detail::residual2(fit.transform, pairs[static_cast<std::size_t>(i)]) <= thr2;
            if (in != (fit.inliers[static_cast<std::size_t>(i)] != 0)) changed = true;
            fit.inliers[static_cast<std::size_t>(i)] = in;
        }
        if (!changed) break;
    }

    double ss = 0.0;
    fit.inlier_count = 0;
    for (int i = 0; i < n; ++i) {
        if (!fit.inliers[static_cast<std::size_t>(i)]) continue;
        ++fit.inlier_count;
        ss += detail::residual2(fit.transform, pairs[static_cast<std::size_t>(i)]);
    }
    if (fit.inlier_count < std::max(2, cfg.min_inliers))
        throw RegistrationFailedError("refit consensus collapsed below min_inliers");
    fit.rms_residual_um = std::sqrt(ss / fit.inlier_count);
    return fit;
}

// Maps centroids through the transform; panel and positivity are untouched.
inline std::vector<NucleusRecord> apply_transform(const RigidTransform& t,
                                                  std::span<const NucleusRecord> nuclei) {
    std::vector<NucleusRecord> out(nuclei.begin(), nuclei.end());
    for (auto& n : out) n.centroid_um = t.apply(n.centroid_um);
    return out;
}

} // namespace timedrs
