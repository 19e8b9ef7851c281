#pragma once
// Uniform random hyper-parameter search over the boosting space. Candidates
// are scored by mean validation C-index across all folds; selection is
// deterministic for a fixed seed (ties go to the lowest sample index).
// Per-task seeds derive from the master seed by flat offset:
// candidate i on fold s trains with seed + i * n_folds + s.

#include <cstdint>
#include <span>
#include <vector>

#include "timedrs/boosting.hpp"
#include "timedrs/survival.hpp"
#include "timedrs/thread_pool.hpp"

namespace timedrs {

struct SearchSpace {
    int num_boost_round_lo = 8;
    int num_boost_round_hi = 256;
    double learning_rate_lo = 0.001;
    double learning_rate_hi = 0.1;
    int max_depth_lo = 1;
    int max_depth_hi = 16;
    std::vector<double> sampling_fractions = {0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    double min_child_weight_lo = 0.01;
    double min_child_weight_hi = 3.0;
    double reg_lambda_lo = 0.1;
    double reg_lambda_hi = 2.0;
    double reg_alpha_lo = 0.1;
    double reg_alpha_hi = 2.0;
    std::vector<BoosterKind> boosters = {BoosterKind::Gbtree, BoosterKind::Dart};
    double rate_drop_lo = 0.1;
    double rate_drop_hi = 0.7;
};

// Draws every field in a fixed order so the stream stays aligned regardless
// of the values drawn.
inline BoostingConfig sample_config(const SearchSpace& space, Rng& rng) {
    BoostingConfig cfg;
    cfg.num_boost_round = rng.uniform_int(space.num_boost_round_lo, space.num_boost_round_hi);
    cfg.learning_rate = rng.uniform(space.learning_rate_lo, space.learning_rate_hi);
    cfg.max_depth = rng.uniform_int(space.max_depth_lo, space.max_depth_hi);
    cfg.subsample = rng.choice(space.sampling_fractions);
    cfg.colsample_bytree = rng.choice(space.sampling_fractions);
    cfg.colsample_bylevel = rng.choice(space.sampling_fractions);
    cfg.colsample_bynode = rng.choice(space.sampling_fractions);
    cfg.min_child_weight = rng.uniform(space.min_child_weight_lo, space.min_child_weight_hi);
    cfg.reg_lambda = rng.uniform(space.reg_lambda_lo, space.reg_lambda_hi);
    cfg.reg_alpha = rng.uniform(space.reg_alpha_lo, space.reg_alpha_hi);
    cfg.booster = rng.choice(space.boosters);
    cfg.rate_drop = rng.uniform(space.rate_drop_lo, space.rate_drop_hi);
    return cfg;
}

struct SearchFold {
    std::vector<int> train_rows;
    std::vector<int> validation_rows;
};

struct SearchOutcome {
    BoostingConfig best_config;
    int best_index = -1;
    double best_mean_cindex = 0.0;
    std::vector<double> mean_cindex; // per candidate
};

namespace detail {

struct FoldData {
    FeatureMatrix x_train;
    CoxObjectiveState state;
    FeatureMatrix x_val;
    std::vector<double> val_times;
    std::vector<std::uint8_t> val_events;
};

inline FeatureMatrix submatrix(const FeatureMatrix& x, std::span<const int> rows) {
    FeatureMatrix m;
    m.rows = static_cast<int>(rows.size());
    m.cols = x.cols;
    m.data.reserve(static_cast<std::size_t>(m.rows) * static_cast<std::size_t>(m.cols));
    for (const int r : rows) {
        const auto row = x.row(r);
        m.data.insert(m.data.end(), row.begin(), row.end());
    }
    return m;
}

inline FoldData prepare_fold(const FeatureMatrix& x, std::span<const double> times,
                             std::span<const std::uint8_t> events, const SearchFold& fold,
                             int fold_index) {
    for (const int r : fold.train_rows)
        for (const int v : fold.validation_rows)
            if (r == v)
                throw ValidationError("fold " + std::to_string(fold_index) +
                                      " has overlapping train/validation rows");

    FoldData data;
    data.x_train = submatrix(x, fold.train_rows);
    std::vector<double> t_train;
    std::vector<std::uint8_t> e_train;
    for (const int r : fold.train_rows) {
        t_train.push_back(times[static_cast<std::size_t>(r)]);
        e_train.push_back(events[static_cast<std::size_t>(r)]);
    }
    data.state = CoxObjectiveState::create(t_train, e_train);
    if (data.state.n_events() == 0)
        throw ProtocolError("fold " + std::to_string(fold_index) +
                            " has no events in its training portion");

    data.x_val = submatrix(x, fold.validation_rows);
    for (const int r : fold.validation_rows) {
        data.val_times.push_back(times[static_cast<std::size_t>(r)]);
        data.val_events.push_back(events[static_cast<std::size_t>(r)]);
    }
    bool admissible = false;
    for (std::size_t i = 0; i < data.val_times.size() && !admissible; ++i)
        for (std::size_t j = 0; j < data.val_times.size(); ++j)
            if (data.val_events[i] && data.val_times[i] < data.val_times[j]) {
                admissible = true;
                break;
            }
    if (!admissible)
        throw ProtocolError("fold " + std::to_string(fold_index) +
                            " has no admissible validation pairs");
    return data;
}

} // namespace detail

inline SearchOutcome random_search(const FeatureMatrix& x, std::span<const double> times,
                                   std::span<const std::uint8_t> events,
                                   std::span<const SearchFold> folds, const SearchSpace& space,
                                   int n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw ValidationError("random search needs at least one sample point");
    if (folds.empty()) throw ValidationError("random search needs at least one fold");

    std::vector<detail::FoldData> fold_data;
    fold_data.reserve(folds.size());
    for (std::size_t s = 0; s < folds.size(); ++s)
        fold_data.push_back(detail::prepare_fold(x, times, events, folds[s], static_cast<int>(s)));

    Rng sampler(seed);
    std::vector<BoostingConfig> candidates;
    candidates.reserve(static_cast<std::size_t>(n_samples));
    for (int i = 0; i < n_samples; ++i) {
        BoostingConfig cfg = sample_config(space, sampler);
        cfg.rng_seed = seed + static_cast<std::uint64_t>(i) * folds.size();
        candidates.push_back(cfg);
    }

    SearchOutcome outcome;
    outcome.mean_cindex.assign(static_cast<std::size_t>(n_samples), 0.0);
    parallel_for(static_cast<std::size_t>(n_samples), [&](std::size_t i) {
        double total = 0.0;
        for (std::size_t s = 0; s < fold_data.size(); ++s) {
            BoostingConfig cfg = candidates[i];
            cfg.rng_seed = candidates[i].rng_seed + s;
            const TreeEnsemble model = train(fold_data[s].x_train, fold_data[s].state, cfg);
            std::vector<double> drs(static_cast<std::size_t>(fold_data[s].x_val.rows));
            for (int r = 0; r < fold_data[s].x_val.rows; ++r)
                drs[static_cast<std::size_t>(r)] = model.predict(fold_data[s].x_val.row(r));
            total += concordance_index(drs, fold_data[s].val_times, fold_data[s].val_events);
        }
        outcome.mean_cindex[i] = total / static_cast<double>(fold_data.size());
    });

    outcome.best_index = 0;
    for (int i = 1; i < n_samples; ++i)
        if (outcome.mean_cindex[static_cast<std::size_t>(i)] >
            outcome.mean_cindex[static_cast<std::size_t>(outcome.best_index)])
            outcome.best_index = i;
    outcome.best_config = candidates[static_cast<std::size_t>(outcome.best_index)];
    outcome.best_mean_cindex = outcome.mean_cindex[static_cast<std::size_t>(outcome.best_index)];
    return outcome;
}

} // namespace timedrs
