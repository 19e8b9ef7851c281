#pragma once
// The discovery / cross-arm DRS protocol: repeated 60/20/20 splits, one model
// per split refit with the search-selected configuration, test-portion
// ensembling into per-patient scores, the averaged-median threshold, and
// stratification into High/Low Risk groups.

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "timedrs/boosting.hpp"
#include "timedrs/search.hpp"
#include "timedrs/survival.hpp"
#include "timedrs/thread_pool.hpp"

namespace timedrs {

struct SplitPlan {
    int split_id = 0;
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::vector<std::string> test;
};

// Independent uniform shuffles partitioned 60/20/20 (train gets round(0.6 n),
// validation round(0.2 n), test the remainder).
inline std::vector<SplitPlan> make_splits(std::span<const std::string> ids, int n_splits,
                                          std::uint64_t seed) {
    const int n = static_cast<int>(ids.size());
    if (n < 10) throw InsufficientDataError("splitting needs at least 10 patients");
    if (n_splits < 1) throw ValidationError("n_splits must be positive");

    const int n_train = static_cast<int>(std::llround(0.6 * n));
    const int n_val = static_cast<int>(std::llround(0.2 * n));

    Rng rng(seed);
    std::vector<SplitPlan> plans;
    plans.reserve(static_cast<std::size_t>(n_splits));
    std::vector<std::string> pool(ids.begin(), ids.end());
    for (int s = 0; s < n_splits; ++s) {
        rng.shuffle(pool);
        SplitPlan plan;
        plan.split_id = s;
        plan.train.assign(pool.begin(), pool.begin() + n_train);
        plan.validation.assign(pool.begin() + n_train, pool.begin() + n_train + n_val);
        plan.test.assign(pool.begin() + n_train + n_val, pool.end());
        std::sort(plan.train.begin(), plan.train.end());
        std::sort(plan.validation.begin(), plan.validation.end());
        std::sort(plan.test.begin(), plan.test.end());
        plans.push_back(std::move(plan));
    }
    return plans;
}

enum class DrsSource { IntraArm, CrossArm };
enum class RiskGroup { HighRisk, LowRisk };

inline const char* drs_source_name(DrsSource s) {
    return s == DrsSource::IntraArm ? "intra_arm" : "cross_arm";
}
inline const char* risk_group_name(RiskGroup g) {
    return g == RiskGroup::HighRisk ? "HighRisk" : "LowRisk";
}

// Higher scores indicate worse prognosis; ties at the threshold go LowRisk.
inline RiskGroup stratify(double drs, double threshold) {
    return drs > threshold ? RiskGroup::HighRisk : RiskGroup::LowRisk;
}

struct DrsResult {
    std::string patient_id;
    double drs = 0.0;
    DrsSource source = DrsSource::IntraArm;
    double threshold = 0.0;
    RiskGroup group = RiskGroup::LowRisk;
};

// One arm, one endpoint, aligned columns.
struct LabeledCohort {
    std::vector<std::string> ids;
    FeatureMatrix features;
    std::vector<double> times;
    std::vector<std::uint8_t> events;

    int index_of(const std::string& id) const {
        for (std::size_t i = 0; i < ids.size(); ++i)
            if (ids[i] == id) return static_cast<int>(i);
        return -1;
    }
};

inline LabeledCohort make_labeled_cohort(std::span<const FeatureVector> features,
                                         std::span<const SurvivalRecord> survival, Arm arm,
                                         Endpoint endpoint) {
    std::map<std::string, const SurvivalRecord*> by_patient;
    for (const auto& r : survival)
        if (r.arm == arm && r.endpoint == endpoint) by_patient[r.patient_id] = &r;

    LabeledCohort cohort;
    cohort.features.cols = kNumPhenotypes;
    for (const auto& f : features) {
        const auto it = by_patient.find(f.patient_id);
        if (it == by_patient.end()) continue;
        validate(f);
        validate(*it->second);
        cohort.ids.push_back(f.patient_id);
        cohort.features.data.insert(cohort.features.data.end(), f.values.begin(),
                                    f.values.end());
        cohort.times.push_back(it->second->time_months);
        cohort.events.push_back(it->second->event ? 1 : 0);
    }
    cohort.features.rows = static_cast<int>(cohort.ids.size());
    return cohort;
}

inline std::vector<SearchFold> folds_from_splits(const LabeledCohort& cohort,
                                                 std::span<const SplitPlan> splits) {
    std::map<std::string, int> row_of;
    for (std::size_t i = 0; i < cohort.ids.size(); ++i)
        row_of[cohort.ids[i]] = static_cast<int>(i);
    std::vector<SearchFold> folds;
    folds.reserve(splits.size());
    for (const auto& plan : splits) {
        SearchFold fold;
        for (const auto& id : plan.train) {
            const auto it = row_of.find(id);
            if (it == row_of.end()) throw ProtocolError("split references unknown patient " + id);
            fold.train_rows.push_back(it->second);
        }
        for (const auto& id : plan.validation) {
            const auto it = row_of.find(id);
            if (it == row_of.end()) throw ProtocolError("split references unknown patient " + id);
            fold.validation_rows.push_back(it->second);
        }
        folds.push_back(std::move(fold));
    }
    return folds;
}

struct DiscoveryResult {
    std::vector<TreeEnsemble> models;        // one per split
    std::vector<DrsResult> intra_arm;        // one per patient, id order of the cohort
    double threshold = 0.0;
    std::vector<double> validation_medians;  // per split
    std::vector<double> validation_cindex;   // per split
};

// Trains one model per split with the shared configuration (seed + split_id),
// ensembles each patient's test-portion predictions, and derives the
// stratification threshold as the mean of per-split validation medians.
inline DiscoveryResult run_discovery(const LabeledCohort& cohort,
                                     std::span<const SplitPlan> splits,
                                     const BoostingConfig& config, std::uint64_t refit_seed) {
    if (splits.empty()) throw ValidationError("run_discovery needs at least one split");
    std::map<std::string, int> row_of;
    for (std::size_t i = 0; i < cohort.ids.size(); ++i)
        row_of[cohort.ids[i]] = static_cast<int>(i);

    struct SplitRows {
        std::vector<int> train, validation, test;
    };
    std::vector<SplitRows> rows(splits.size());
    for (std::size_t s = 0; s < splits.size(); ++s) {
        const auto lookup = [&](const std::vector<std::string>& ids, std::vector<int>& out) {
            for (const auto& id : ids) {
                const auto it = row_of.find(id);
                if (it == row_of.end())
                    throw ProtocolError("split references unknown patient " + id);
                out.push_back(it->second);
            }
        };
        lookup(splits[s].train, rows[s].train);
        lookup(splits[s].validation, rows[s].validation);
        lookup(splits[s].test, rows[s].test);
    }

    DiscoveryResult result;
    result.models.resize(splits.size());
    result.validation_medians.assign(splits.size(), 0.0);
    result.validation_cindex.assign(splits.size(), 0.0);

    parallel_for(splits.size(), [&](std::size_t s) {
        const FeatureMatrix x_train = detail::submatrix(cohort.features, rows[s].train);
        std::vector<double> t_train;
        std::vector<std::uint8_t> e_train;
        for (const int r : rows[s].train) {
            t_train.push_back(cohort.times[static_cast<std::size_t>(r)]);
            e_train.push_back(cohort.events[static_cast<std::size_t>(r)]);
        }
        const auto state = CoxObjectiveState::create(t_train, e_train);
        if (state.n_events() == 0)
            throw ProtocolError("split " + std::to_string(s) +
                                " has no events in its training portion");
        BoostingConfig cfg = config;
        cfg.rng_seed = refit_seed + s;
        result.models[s] = train(x_train, state, cfg);

        std::vector<double> val_drs;
        std::vector<double> val_t;
        std::vector<std::uint8_t> val_e;
        for (const int r : rows[s].validation) {
            val_drs.push_back(result.models[s].predict(cohort.features.row(r)));
            val_t.push_back(cohort.times[static_cast<std::size_t>(r)]);
            val_e.push_back(cohort.events[static_cast<std::size_t>(r)]);
        }
        result.validation_medians[s] = detail::median_sorted(val_drs);
        result.validation_cindex[s] = concordance_index(val_drs, val_t, val_e);
    });

    double threshold = 0.0;
    for (const double m : result.validation_medians) threshold += m;
    threshold /= static_cast<double>(result.validation_medians.size());
    result.threshold = threshold;

    // ensemble: mean over the splits whose test portion holds the patient
    std::vector<double> sum(cohort.ids.size(), 0.0);
    std::vector<int> count(cohort.ids.size(), 0);
    for (std::size_t s = 0; s < splits.size(); ++s) {
        for (const int r : rows[s].test) {
            sum[static_cast<std::size_t>(r)] +=
                result.models[s].predict(cohort.features.row(r));
            ++count[static_cast<std::size_t>(r)];
        }
    }
    for (std::size_t i = 0; i < cohort.ids.size(); ++i) {
        if (count[i] == 0)
            throw ProtocolError("patient " + cohort.ids[i] +
                                " never appears in a test portion; add splits");
        DrsResult r;
        r.patient_id = cohort.ids[i];
        r.drs = sum[i] / static_cast<double>(count[i]);
        r.source = DrsSource::IntraArm;
        r.threshold = threshold;
        r.group = stratify(r.drs, threshold);
        result.intra_arm.push_back(std::move(r));
    }
    return result;
}

// External patients: mean prediction over every model, same threshold.
inline std::vector<DrsResult> run_cross_arm(std::span<const TreeEnsemble> models,
                                            const LabeledCohort& cohort, double threshold) {
    if (models.empty()) throw ValidationError("run_cross_arm needs at least one model");
    std::vector<DrsResult> results;
    results.reserve(cohort.ids.size());
    for (std::size_t i = 0; i < cohort.ids.size(); ++i) {
        double sum = 0.0;
        for (const auto& m : models) sum += m.predict(cohort.features.row(static_cast<int>(i)));
        DrsResult r;
        r.patient_id = cohort.ids[i];
        r.drs = sum / static_cast<double>(models.size());
        r.source = DrsSource::CrossArm;
        r.threshold = threshold;
        r.group = stratify(r.drs, threshold);
        results.push_back(std::move(r));
    }
    return results;
}

} // namespace timedrs
