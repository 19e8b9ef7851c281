#pragma once
// Synthetic cohorts with planted hazards: the desk-scale oracle for the
// downstream modules. Densities are drawn log-normally (non-negative,
// right-skewed); the hazard acts on the latent standardised draws, so risk is
// monotone in each feature. A second generator emits a nucleus-level cohort
// (nuclei + masks + survival) for exercising the featurisation path.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "timedrs/density.hpp"
#include "timedrs/rng.hpp"
#include "timedrs/types.hpp"

namespace timedrs {

struct SyntheticCohortSpec {
    int n_patients = 120;
    std::array<double, kNumPhenotypes> planted_coefficients{}; // log-hazard weights
    double censoring_rate = 0.2;
    double baseline_hazard = 0.08; // events per month at zero risk
    std::uint64_t rng_seed = 0;
    Arm arm = Arm::Arm1;
    std::string id_prefix; // defaults to the arm name
};

inline void validate(const SyntheticCohortSpec& spec) {
    if (spec.n_patients < 10) throw ValidationError("synthetic cohort needs >= 10 patients");
    if (!(spec.censoring_rate >= 0.0 && spec.censoring_rate < 1.0))
        throw ValidationError("censoring_rate must lie in [0, 1)");
    if (!(spec.baseline_hazard > 0.0)) throw ValidationError("baseline_hazard must be positive");
}

struct GroundTruth {
    std::vector<std::string> patient_ids;
    std::vector<double> linear_predictor; // higher = riskier

    // ids sorted by descending risk; ties keep generation order
    std::vector<std::string> risk_ordering() const {
        std::vector<int> order(patient_ids.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return linear_predictor[static_cast<std::size_t>(a)] >
                   linear_predictor[static_cast<std::size_t>(b)];
        });
        std::vector<std::string> ids;
        ids.reserve(order.size());
        for (const int i : order) ids.push_back(patient_ids[static_cast<std::size_t>(i)]);
        return ids;
    }
};

struct SyntheticCohort {
    std::vector<FeatureVector> features;
    std::vector<SurvivalRecord> survival; // PFS and OS per patient
    GroundTruth truth;
};

// Feature j = exp(mu_j + sigma_j * z_j) with z_j ~ N(0,1); the linear
// predictor is coefficients . z. Survival is exponential with hazard
// baseline * exp(eta); OS runs at 0.4x the PFS hazard for longer horizons.
// Censoring happens with the requested probability, uniformly before the
// event time, so censoring_rate = 0 means every record carries an event.
inline SyntheticCohort generate_synthetic_cohort(const SyntheticCohortSpec& spec) {
    validate(spec);
    Rng rng(spec.rng_seed);
    const std::string prefix =
        spec.id_prefix.empty() ? std::string(arm_name(spec.arm)) : spec.id_prefix;

    SyntheticCohort cohort;
    for (int p = 0; p < spec.n_patients; ++p) {
        char suffix[8];
        std::snprintf(suffix, sizeof(suffix), "-%04d", p);
        const std::string id = prefix + suffix;

        FeatureVector fv;
        fv.patient_id = id;
        double eta = 0.0;
        for (int j = 0; j < kNumPhenotypes; ++j) {
            const double z = rng.normal();
            const double mu = std::log(20.0 + 10.0 * j);
            fv.values[static_cast<std::size_t>(j)] = std::exp(mu + 0.8 * z);
            eta += spec.planted_coefficients[static_cast<std::size_t>(j)] * z;
        }
        cohort.features.push_back(fv);
        cohort.truth.patient_ids.push_back(id);
        cohort.truth.linear_predictor.push_back(eta);

        for (const Endpoint endpoint : {Endpoint::Pfs, Endpoint::Os}) {
            const double hazard = spec.baseline_hazard *
                                  (endpoint == Endpoint::Os ? 0.4 : 1.0) * std::exp(eta);
            const double event_time = -std::log(1.0 - rng.uniform()) / hazard;
            SurvivalRecord rec;
            rec.patient_id = id;
            rec.arm = spec.arm;
            rec.endpoint = endpoint;
            if (rng.uniform() < spec.censoring_rate) {
                rec.time_months = event_time * rng.uniform();
                rec.event = false;
            } else {
                rec.time_months = event_time;
                rec.event = true;
            }
            cohort.survival.push_back(std::move(rec));
        }
    }
    return cohort;
}

// ---------------------------------------------------------------------------
// Nucleus-level fixture cohort (elliptical tumour masks, scattered nuclei)

struct NucleusCohortSpec {
    int n_patients = 4;
    int mask_size_px = 96;
    double pixel_size_um = 4.0;
    int nuclei_per_panel = 300;
    std::uint64_t rng_seed = 0;
};

struct NucleusCohort {
    Cohort cohort;
};

inline NucleusCohort generate_nucleus_cohort(const NucleusCohortSpec& spec) {
    if (spec.n_patients < 1 || spec.mask_size_px < 8 || spec.nuclei_per_panel < 0 ||
        spec.pixel_size_um <= 0.0)
        throw ValidationError("invalid nucleus cohort spec");

    Rng rng(spec.rng_seed);
    NucleusCohort out;
    std::int64_t next_id = 1;
    for (int p = 0; p < spec.n_patients; ++p) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "SYN-%03d", p);
        PatientData patient;
        patient.id = buf;

        const int n = spec.mask_size_px;
        RegionMask mask;
        mask.width = n;
        mask.height = n;
        mask.grid.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0);
        mask.pixel_size_um = spec.pixel_size_um;
        mask.origin_um = {0.0, 0.0};
        const double cx = n / 2.0 + rng.uniform(-n / 8.0, n / 8.0);
        const double cy = n / 2.0 + rng.uniform(-n / 8.0, n / 8.0);
        const double rx = rng.uniform(n / 5.0, n / 3.0);
        const double ry = rng.uniform(n / 5.0, n / 3.0);
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const double dx = (x - cx) / rx;
                const double dy = (y - cy) / ry;
                if (dx * dx + dy * dy <= 1.0) mask.set(x, y, true);
            }
        patient.tumour_mask = mask;

        const double extent_um = n * spec.pixel_size_um;
        for (const Panel panel : {Panel::P1, Panel::P2}) {
            auto& dest = panel == Panel::P1 ? patient.panel1 : patient.panel2;
            for (int k = 0; k < spec.nuclei_per_panel; ++k) {
                NucleusRecord nucleus;
                nucleus.id = next_id++;
                nucleus.panel = panel;
                nucleus.centroid_um = {rng.uniform(0.0, extent_um), rng.uniform(0.0, extent_um)};
                if (rng.uniform() < 0.7) {
                    // draw one of this panel's phenotypes and use its expression
                    std::vector<MarkerFlags> expressions;
                    for (const auto& row : kExpressionTable)
                        if (row.panel == panel) expressions.push_back(row.expression);
                    nucleus.positivity = rng.choice(expressions);
                } else {
                    for (auto& flag : nucleus.positivity.flags) flag = rng.bernoulli(0.5);
                }
                dest.push_back(std::move(nucleus));
            }
        }

        for (const Endpoint endpoint : {Endpoint::Pfs, Endpoint::Os}) {
            SurvivalRecord rec;
            rec.patient_id = patient.id;
            rec.arm = p % 2 == 0 ? Arm::Arm1 : Arm::Arm3;
            rec.endpoint = endpoint;
            rec.time_months = -std::log(1.0 - rng.uniform()) / 0.1;
            rec.event = rng.bernoulli(0.8);
            patient.survival.push_back(std::move(rec));
        }
        out.cohort.patients.push_back(std::move(patient));
    }
    return out;
}

} // namespace timedrs
