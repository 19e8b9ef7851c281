#pragma once
// Tumour-region dilation and per-phenotype density features. Dilation is a
// morphological disk dilation computed through an exact Euclidean distance
// transform, so the result equals stamping a lattice disk at every true pixel.

#include <algorithm>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "timedrs/types.hpp"

namespace timedrs {

struct AnalysisRegion {
    RegionMask tumour;  // tumour proper: CK-expressing phenotypes are counted here
    RegionMask mask;    // tumour dilated by the vicinity extent
    double area_mm2 = 0.0; // of `mask`
};

namespace detail {

// Felzenszwalb-Huttenlocher 1-D squared distance transform (lower envelope
// of parabolas). f holds per-cell seed costs, d the output distances.
inline void edt_1d(const double* f, double* d, int n, int* v, double* z) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        double s = ((f[q] + static_cast<double>(q) * q) -
                    (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
                   (2.0 * (q - v[k]));
        while (s <= z[k]) {
            --k;
            s = ((f[q] + static_cast<double>(q) * q) -
                 (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
                (2.0 * (q - v[k]));
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < static_cast<double>(q)) ++k;
        const double dq = static_cast<double>(q - v[k]);
        d[q] = dq * dq + f[v[k]];
    }
}

} // namespace detail

// Squared Euclidean distance (in pixels) from every pixel to the nearest
// true pixel of the mask.
inline std::vector<double> squared_distance_to_true(const RegionMask& mask) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    const int w = mask.width, h = mask.height;
    std::vector<double> dist(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), kInf);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (mask.at(x, y)) dist[static_cast<std::size_t>(y) * w + x] = 0.0;

    const int n = std::max(w, h);
    std::vector<double> f(static_cast<std::size_t>(n)), d(static_cast<std::size_t>(n));
    std::vector<double> z(static_cast<std::size_t>(n) + 1);
    std::vector<int> v(static_cast<std::size_t>(n));

    for (int y = 0; y < h; ++y) {
        double* row = dist.data() + static_cast<std::size_t>(y) * w;
        detail::edt_1d(row, d.data(), w, v.data(), z.data());
        std::copy(d.begin(), d.begin() + w, row);
    }
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) f[static_cast<std::size_t>(y)] = dist[static_cast<std::size_t>(y) * w + x];
        detail::edt_1d(f.data(), d.data(), h, v.data(), z.data());
        for (int y = 0; y < h; ++y) dist[static_cast<std::size_t>(y) * w + x] = d[static_cast<std::size_t>(y)];
    }
    return dist;
}

// Dilates the tumour mask by a Euclidean disk whose radius is extent_um
// converted to pixels (rounded to nearest). Extent 0 is the identity.
inline AnalysisRegion dilate_region(const RegionMask& tumour, double extent_um) {
    validate(tumour);
    if (extent_um < 0.0) throw ValidationError("dilation extent must be non-negative");
    if (tumour.empty()) throw ValidationError("empty tumour mask has no analysis region");

    const long radius_px = std::lround(extent_um / tumour.pixel_size_um);
    AnalysisRegion region;
    region.tumour = tumour;
    region.mask = tumour;
    if (radius_px > 0) {
        const double r2 = static_cast<double>(radius_px) * static_cast<double>(radius_px);
        const std::vector<double> d2 = squared_distance_to_true(tumour);
        for (std::size_t i = 0; i < d2.size(); ++i) region.mask.grid[i] = d2[i] <= r2 ? 1 : 0;
    }
    region.area_mm2 = region.mask.area_mm2();
    return region;
}

namespace detail {

struct DensityAccumulator {
    std::array<std::int64_t, kNumPhenotypes> counts{};
    double area_mm2 = 0.0;

    void add(std::span<const NucleusRecord> nuclei, const AnalysisRegion& region) {
        for (const auto& n : nuclei) {
            const Phenotype ph = assign_phenotype(n.panel, n.positivity);
            if (ph == Phenotype::Unclassified) continue;
            const bool inside = is_tumour_cell(ph) ? region.tumour.contains(n.centroid_um)
                                                   : region.mask.contains(n.centroid_um);
            if (inside) ++counts[static_cast<std::size_t>(ph)];
        }
        area_mm2 += region.area_mm2;
    }

    FeatureVector finish(std::string patient_id) const {
        if (!(area_mm2 > 0.0)) throw ValidationError("analysis region has zero area");
        FeatureVector out;
        out.patient_id = std::move(patient_id);
        for (int i = 0; i < kNumPhenotypes; ++i)
            out.values[static_cast<std::size_t>(i)] =
                static_cast<double>(counts[static_cast<std::size_t>(i)]) / area_mm2;
        return out;
    }
};

} // namespace detail

inline FeatureVector density_features(std::string patient_id,
                                      std::span<const NucleusRecord> nuclei,
                                      const AnalysisRegion& region) {
    detail::DensityAccumulator acc;
    acc.add(nuclei, region);
    return acc.finish(std::move(patient_id));
}

// Multiple tissue pieces for one patient: counts and areas pool before the
// division, yielding one WSI-level feature vector.
struct TissuePiece {
    std::span<const NucleusRecord> nuclei;
    const AnalysisRegion* region = nullptr;
};

inline FeatureVector pooled_density_features(std::string patient_id,
                                             std::span<const TissuePiece> pieces) {
    detail::DensityAccumulator acc;
    for (const auto& piece : pieces) acc.add(piece.nuclei, *piece.region);
    return acc.finish(std::move(patient_id));
}

} // namespace timedrs
