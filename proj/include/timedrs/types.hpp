#pragma once
// Core domain records shared across the pipeline. All types are plain values,
// immutable by convention after construction.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "timedrs/common.hpp"
#include "timedrs/phenotype.hpp"

namespace timedrs {

struct NucleusRecord {
    std::int64_t id = 0;
    Point2 centroid_um{};
    Panel panel = Panel::P1;
    MarkerFlags positivity{};
};

inline void validate(const NucleusRecord& n) {
    if (!is_finite(n.centroid_um) || n.centroid_um.x < 0.0 || n.centroid_um.y < 0.0)
        throw ValidationError("nucleus centroid must be finite and non-negative");
}

// Binary raster anchored in micrometre space. origin_um is the centre of
// pixel (0, 0); pixel (ix, iy) is centred at origin + (ix, iy) * pixel_size.
struct RegionMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> grid; // row-major, nonzero = inside
    double pixel_size_um = 1.0;
    Point2 origin_um{};

    bool at(int ix, int iy) const {
        if (ix < 0 || iy < 0 || ix >= width || iy >= height) return false;
        return grid[static_cast<std::size_t>(iy) * static_cast<std::size_t>(width) +
                    static_cast<std::size_t>(ix)] != 0;
    }

    void set(int ix, int iy, bool v) {
        grid[static_cast<std::size_t>(iy) * static_cast<std::size_t>(width) +
             static_cast<std::size_t>(ix)] = v ? 1 : 0;
    }

    std::size_t true_count() const {
        std::size_t c = 0;
        for (const auto v : grid) c += v != 0;
        return c;
    }

    double area_um2() const {
        return static_cast<double>(true_count()) * pixel_size_um * pixel_size_um;
    }

    double area_mm2() const { return area_um2() * 1e-6; }

    // Nearest-pixel membership test for a point in micrometres.
    bool contains(const Point2& p) const {
        const long ix = std::lround((p.x - origin_um.x) / pixel_size_um);
        const long iy = std::lround((p.y - origin_um.y) / pixel_size_um);
        return at(static_cast<int>(ix), static_cast<int>(iy));
    }

    bool empty() const { return true_count() == 0; }
};

inline void validate(const RegionMask& m) {
    if (m.pixel_size_um <= 0.0) throw ValidationError("pixel_size_um must be positive");
    if (m.width < 0 || m.height < 0 ||
        m.grid.size() != static_cast<std::size_t>(m.width) * static_cast<std::size_t>(m.height))
        throw ValidationError("mask grid size does not match its dimensions");
}

struct SurvivalRecord {
    std::string patient_id;
    Arm arm = Arm::Arm1;
    Endpoint endpoint = Endpoint::Pfs;
    double time_months = 0.0;
    bool event = false;
};

inline void validate(const SurvivalRecord& r) {
    if (!(r.time_months >= 0.0) || !std::isfinite(r.time_months))
        throw ValidationError("time_months must be finite and non-negative");
}

// The 14 per-phenotype densities (count per mm^2) in canonical order.
struct FeatureVector {
    std::string patient_id;
    std::array<double, kNumPhenotypes> values{};
};

inline void validate(const FeatureVector& f) {
    for (const double v : f.values) {
        if (!std::isfinite(v) || v < 0.0)
            throw ValidationError("feature values must be finite and non-negative (patient " +
                                  f.patient_id + ")");
    }
}

struct PatientData {
    std::string id;
    std::vector<NucleusRecord> panel1;
    std::vector<NucleusRecord> panel2;
    RegionMask tumour_mask;
    std::vector<SurvivalRecord> survival;
};

struct Cohort {
    std::vector<PatientData> patients;
};

struct RejectionReport {
    struct Entry {
        std::string patient_id;
        std::string reason;
    };
    std::vector<Entry> entries;
    bool empty() const { return entries.empty(); }
};

} // namespace timedrs
