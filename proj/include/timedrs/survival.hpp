#pragma once
// Survival statistics: Kaplan-Meier product-limit curves, the two-group
// log-rank test, Harrell's concordance index, Mann-Whitney U (exact when
// small, normal approximation with tie correction otherwise), Welch's t-test
// and a univariate logistic separability test with a likelihood-ratio p.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "timedrs/special_functions.hpp"
#include "timedrs/types.hpp"

namespace timedrs {

struct KmCurve {
    std::vector<double> event_times;   // ascending, distinct event times
    std::vector<double> survival_prob; // S(t) just after each event time
    std::vector<int> at_risk;          // n at risk at each event time
    std::vector<double> censor_marks;  // censored observation times

    // step function; S(0) = 1
    double survival_at(double t) const {
        double s = 1.0;
        for (std::size_t i = 0; i < event_times.size() && event_times[i] <= t; ++i)
            s = survival_prob[i];
        return s;
    }
};

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::string test_name;
};

namespace detail {

struct TimeEvent {
    double time;
    bool event;
};

// Administrative censoring: observations past the horizon become censored at
// the horizon; events exactly at the horizon stay events.
inline std::vector<TimeEvent> censored_observations(std::span<const SurvivalRecord> records,
                                                    std::optional<double> censor_at) {
    std::vector<TimeEvent> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        validate(r);
        TimeEvent te{r.time_months, r.event};
        if (censor_at && te.time > *censor_at) {
            te.time = *censor_at;
            te.event = false;
        }
        out.push_back(te);
    }
    std::sort(out.begin(), out.end(), [](const TimeEvent& a, const TimeEvent& b) {
        return a.time < b.time;
    });
    return out;
}

inline double median_sorted(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 0) throw ValidationError("median of empty set");
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Fenwick tree over value ranks; supports prefix counts.
class Fenwick {
public:
    explicit Fenwick(int n) : tree_(static_cast<std::size_t>(n) + 1, 0) {}
    void add(int i, int delta) {
        for (++i; i < static_cast<int>(tree_.size()); i += i & (-i)) tree_[static_cast<std::size_t>(i)] += delta;
    }
    int prefix(int i) const { // count of entries with rank <= i
        int s = 0;
        for (++i; i > 0; i -= i & (-i)) s += tree_[static_cast<std::size_t>(i)];
        return s;
    }

private:
    std::vector<int> tree_;
};

} // namespace detail

inline KmCurve kaplan_meier(std::span<const SurvivalRecord> records,
                            std::optional<double> censor_at = std::nullopt) {
    if (records.empty()) throw ValidationError("Kaplan-Meier needs at least one record");
    const auto obs = detail::censored_observations(records, censor_at);

    KmCurve curve;
    double s = 1.0;
    std::size_t i = 0;
    const std::size_t n = obs.size();
    while (i < n) {
        std::size_t j = i;
        int deaths = 0;
        while (j < n && obs[j].time == obs[i].time) {
            deaths += obs[j].event;
            ++j;
        }
        if (deaths > 0) {
            const int at_risk = static_cast<int>(n - i);
            s *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
            curve.event_times.push_back(obs[i].time);
            curve.survival_prob.push_back(s);
            curve.at_risk.push_back(at_risk);
        }
        for (std::size_t k = i; k < j; ++k)
            if (!obs[k].event) curve.censor_marks.push_back(obs[k].time);
        i = j;
    }
    return curve;
}

inline TestResult log_rank(std::span<const SurvivalRecord> group_a,
                           std::span<const SurvivalRecord> group_b,
                           std::optional<double> censor_at = std::nullopt) {
    if (group_a.empty() || group_b.empty())
        throw ValidationError("log-rank needs two non-empty groups");
    const auto a = detail::censored_observations(group_a, censor_at);
    const auto b = detail::censored_observations(group_b, censor_at);

    // pooled distinct event times
    std::map<double, std::pair<int, int>> deaths; // time -> (d_a, d_b)
    for (const auto& o : a)
        if (o.event) ++deaths[o.time].first;
    for (const auto& o : b)
        if (o.event) ++deaths[o.time].second;
    if (deaths.empty())
        throw UndefinedStatisticError("log-rank undefined: no events in either group");

    double observed_minus_expected = 0.0;
    double variance = 0.0;
    for (const auto& [t, d] : deaths) {
        const auto at_risk = [&](const std::vector<detail::TimeEvent>& g) {
            return static_cast<int>(g.end() -
                                    std::lower_bound(g.begin(), g.end(), t,
                                                     [](const detail::TimeEvent& o, double tt) {
                                                         return o.time < tt;
                                                     }));
        };
        const double n1 = at_risk(a);
        const double n2 = at_risk(b);
        const double nt = n1 + n2;
        const double dt = d.first + d.second;
        if (nt <= 0.0) continue;
        observed_minus_expected += d.first - dt * n1 / nt;
        if (nt > 1.0)
            variance += dt * (n1 / nt) * (n2 / nt) * (nt - dt) / (nt - 1.0);
    }

    TestResult result;
    result.test_name = "log-rank";
    if (variance <= 0.0) {
        result.statistic = 0.0;
        result.p_value = 1.0;
        return result;
    }
    result.statistic = observed_minus_expected * observed_minus_expected / variance;
    result.p_value = chi_square_sf(result.statistic, 1.0);
    return result;
}

// Harrell's C over admissible pairs: the strictly earlier time must be an
// event; concordant means the earlier-event patient has the higher score;
// tied scores count one half. Computed with a single time-ordered sweep and a
// Fenwick tree over score ranks.
inline double concordance_index(std::span<const double> scores, std::span<const double> times,
                                std::span<const std::uint8_t> events) {
    const std::size_t n = scores.size();
    if (times.size() != n || events.size() != n)
        throw ValidationError("concordance inputs must have equal length");

    std::vector<double> sorted_scores(scores.begin(), scores.end());
    std::sort(sorted_scores.begin(), sorted_scores.end());
    sorted_scores.erase(std::unique(sorted_scores.begin(), sorted_scores.end()),
                        sorted_scores.end());
    const auto rank_of = [&](double s) {
        return static_cast<int>(std::lower_bound(sorted_scores.begin(), sorted_scores.end(), s) -
                                sorted_scores.begin());
    };

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int x, int y) { return times[static_cast<std::size_t>(x)] < times[static_cast<std::size_t>(y)]; });

    detail::Fenwick counts(static_cast<int>(sorted_scores.size()));
    for (std::size_t i = 0; i < n; ++i) counts.add(rank_of(scores[i]), 1);

    double concordant = 0.0;
    long long admissible = 0;
    std::size_t i = 0;
    std::size_t remaining = n;
    while (i < n) {
        // remove the whole tied-time group first: equal times are inadmissible
        std::size_t j = i;
        while (j < n && times[static_cast<std::size_t>(order[j])] == times[static_cast<std::size_t>(order[i])]) {
            counts.add(rank_of(scores[static_cast<std::size_t>(order[j])]), -1);
            ++j;
        }
        remaining -= j - i;
        for (std::size_t k = i; k < j; ++k) {
            const std::size_t idx = static_cast<std::size_t>(order[k]);
            if (!events[idx]) continue;
            const int r = rank_of(scores[idx]);
            const int later_below = counts.prefix(r - 1);
            const int later_at_or_below = counts.prefix(r);
            const int ties = later_at_or_below - later_below;
            admissible += static_cast<long long>(remaining);
            concordant += static_cast<double>(later_below) + 0.5 * static_cast<double>(ties);
        }
        i = j;
    }
    if (admissible == 0)
        throw UndefinedStatisticError("concordance undefined: no admissible pairs");
    return concordant / static_cast<double>(admissible);
}

inline double concordance_index(std::span<const double> drs,
                                std::span<const SurvivalRecord> records) {
    std::vector<double> times(records.size());
    std::vector<std::uint8_t> events(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        times[i] = records[i].time_months;
        events[i] = records[i].event ? 1 : 0;
    }
    return concordance_index(drs, times, events);
}

enum class MannWhitneyMethod { Auto, Exact, NormalApprox };

namespace detail {

// U statistic of sample a against b via mid-ranks.
inline double mwu_statistic(std::span<const double> a, std::span<const double> b) {
    double u = 0.0;
    for (const double x : a)
        for (const double y : b) {
            if (x > y)
                u += 1.0;
            else if (x == y)
                u += 0.5;
        }
    return u;
}

// Exact two-sided p over all C(N, n_a) labelings of the pooled values:
// P(min(U_a, U_b) <= observed min). Dynamic programming over doubled
// mid-ranks keeps sums integral even with ties.
inline double mwu_exact_p(std::span<const double> a, std::span<const double> b) {
    const int na = static_cast<int>(a.size());
    const int nb = static_cast<int>(b.size());
    const int n = na + nb;

    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int x, int y) { return pooled[static_cast<std::size_t>(x)] < pooled[static_cast<std::size_t>(y)]; });

    // doubled mid-ranks are integers
    std::vector<long long> rank2(static_cast<std::size_t>(n));
    int i = 0;
    while (i < n) {
        int j = i;
        while (j < n && pooled[static_cast<std::size_t>(order[j])] == pooled[static_cast<std::size_t>(order[i])]) ++j;
        const long long r2 = i + j + 1; // 2 * average of ranks i+1..j
        for (int k = i; k < j; ++k) rank2[static_cast<std::size_t>(order[k])] = r2;
        i = j;
    }

    long long obs_r2 = 0;
    for (int k = 0; k < na; ++k) obs_r2 += rank2[static_cast<std::size_t>(k)];
    const double u_a = 0.5 * static_cast<double>(obs_r2) - 0.5 * na * (na + 1.0);
    const double u_min_obs = std::min(u_a, static_cast<double>(na) * nb - u_a);

    long long max_sum = 0;
    for (int k = 0; k < n; ++k) max_sum += rank2[static_cast<std::size_t>(k)];

    // dp[k][s] = number of k-subsets with doubled-rank sum s
    std::vector<std::vector<double>> dp(static_cast<std::size_t>(na) + 1,
                                        std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
    dp[0][0] = 1.0;
    for (int k = 0; k < n; ++k) {
        const long long r2 = rank2[static_cast<std::size_t>(k)];
        for (int c = std::min(na - 1, k); c >= 0; --c)
            for (long long s = max_sum - r2; s >= 0; --s)
                if (dp[static_cast<std::size_t>(c)][static_cast<std::size_t>(s)] > 0.0)
                    dp[static_cast<std::size_t>(c) + 1][static_cast<std::size_t>(s + r2)] +=
                        dp[static_cast<std::size_t>(c)][static_cast<std::size_t>(s)];
    }

    double favourable = 0.0, total = 0.0;
    for (long long s = 0; s <= max_sum; ++s) {
        const double count = dp[static_cast<std::size_t>(na)][static_cast<std::size_t>(s)];
        if (count == 0.0) continue;
        total += count;
        const double u = 0.5 * static_cast<double>(s) - 0.5 * na * (na + 1.0);
        const double u_min = std::min(u, static_cast<double>(na) * nb - u);
        if (u_min <= u_min_obs + 1e-9) favourable += count;
    }
    return favourable / total;
}

inline double mwu_normal_p(std::span<const double> a, std::span<const double> b, double u) {
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double n = na + nb;

    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < pooled.size()) {
        std::size_t j = i;
        while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const double mean = na * nb / 2.0;
    const double var = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (var <= 0.0) return 1.0; // every pooled value tied
    const double diff = u - mean;
    const double cc = diff > 0.0 ? -0.5 : (diff < 0.0 ? 0.5 : 0.0); // continuity correction
    const double z = (diff + cc) / std::sqrt(var);
    return std::min(1.0, 2.0 * normal_sf(std::fabs(z)));
}

} // namespace detail

inline TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                                 MannWhitneyMethod method = MannWhitneyMethod::Auto) {
    if (a.empty() || b.empty())
        throw ValidationError("Mann-Whitney needs two non-empty samples");
    TestResult result;
    result.test_name = "mann-whitney-u";
    result.statistic = detail::mwu_statistic(a, b);
    const bool small = a.size() + b.size() <= 12;
    const bool exact = method == MannWhitneyMethod::Exact ||
                       (method == MannWhitneyMethod::Auto && small);
    result.p_value = exact ? detail::mwu_exact_p(a, b)
                           : detail::mwu_normal_p(a, b, result.statistic);
    return result;
}

// Welch's unequal-variance t-test, two-sided.
inline TestResult students_t(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2)
        throw ValidationError("t-test needs at least 2 observations per sample");
    const auto moments = [](std::span<const double> v) {
        const double n = static_cast<double>(v.size());
        double mean = 0.0;
        for (const double x : v) mean += x;
        mean /= n;
        double var = 0.0;
        for (const double x : v) var += (x - mean) * (x - mean);
        var /= n - 1.0;
        return std::pair<double, double>{mean, var};
    };
    const auto [ma, va] = moments(a);
    const auto [mb, vb] = moments(b);
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double se2 = va / na + vb / nb;
    if (se2 <= 0.0)
        throw UndefinedStatisticError("t-test undefined: zero variance in both samples");

    TestResult result;
    result.test_name = "welch-t";
    result.statistic = (ma - mb) / std::sqrt(se2);
    const double df = se2 * se2 /
                      (va * va / (na * na * (na - 1.0)) + vb * vb / (nb * nb * (nb - 1.0)));
    result.p_value = result.statistic == 0.0
                         ? 1.0
                         : student_t_two_sided_p(result.statistic, df);
    return result;
}

struct LogisticTestResult {
    double statistic = 0.0; // likelihood-ratio G
    double p_value = 1.0;
    std::string test_name = "logistic-lrt";
    bool separable = false;
    double intercept = 0.0;
    double slope = 0.0;
};

// Univariate logistic regression fit by IRLS; p is the likelihood-ratio test
// of the slope against the intercept-only model. Complete separation is
// reported with a flag and a capped p-value, since the MLE diverges.
inline LogisticTestResult logistic_separability(std::span<const double> x,
                                                std::span<const std::uint8_t> labels) {
    const std::size_t n = x.size();
    if (labels.size() != n) throw ValidationError("logistic inputs must have equal length");
    std::size_t n1 = 0;
    for (const auto y : labels) n1 += y != 0;
    if (n1 == 0 || n1 == n) throw ValidationError("logistic test needs both classes present");

    LogisticTestResult result;

    double lo = x[0], hi = x[0];
    for (const double v : x) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double scale = hi - lo;
    if (scale <= 0.0) return result; // constant feature: zero-df LRT, p = 1

    double min1 = std::numeric_limits<double>::infinity();
    double max1 = -std::numeric_limits<double>::infinity();
    double min0 = std::numeric_limits<double>::infinity();
    double max0 = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i]) {
            min1 = std::min(min1, x[i]);
            max1 = std::max(max1, x[i]);
        } else {
            min0 = std::min(min0, x[i]);
            max0 = std::max(max0, x[i]);
        }
    }
    if (max0 < min1 || max1 < min0) result.separable = true;

    const double p_hat = static_cast<double>(n1) / static_cast<double>(n);
    const double ll_null = static_cast<double>(n1) * std::log(p_hat) +
                           static_cast<double>(n - n1) * std::log1p(-p_hat);

    double b0 = std::log(p_hat) - std::log1p(-p_hat);
    double b1 = 0.0;
    double ll = ll_null;
    for (int iter = 0; iter < 100; ++iter) {
        double g0 = 0.0, g1 = 0.0, h00 = 0.0, h01 = 0.0, h11 = 0.0;
        double ll_new = 0.0;
        bool diverged = false;
        for (std::size_t i = 0; i < n; ++i) {
            const double eta = b0 + b1 * x[i];
            if (std::fabs(eta) > 30.0) diverged = true;
            const double p = 1.0 / (1.0 + std::exp(-eta));
            const double y = labels[i] ? 1.0 : 0.0;
            // log(1 + e^eta) computed stably
            ll_new += y * eta - (std::max(eta, 0.0) + std::log1p(std::exp(-std::fabs(eta))));
            const double w = std::max(p * (1.0 - p), 1e-12);
            g0 += y - p;
            g1 += (y - p) * x[i];
            h00 += w;
            h01 += w * x[i];
            h11 += w * x[i] * x[i];
        }
        const double det = h00 * h11 - h01 * h01;
        if (diverged || det <= 1e-12) {
            result.separable = true;
            ll = ll_new;
            break;
        }
        const double db0 = (h11 * g0 - h01 * g1) / det;
        const double db1 = (h00 * g1 - h01 * g0) / det;
        b0 += db0;
        b1 += db1;
        if (iter > 0 && std::fabs(ll_new - ll) < 1e-8) {
            ll = ll_new;
            break;
        }
        ll = ll_new;
    }

    result.intercept = b0;
    result.slope = b1;
    result.statistic = std::max(0.0, 2.0 * (ll - ll_null));
    result.p_value = chi_square_sf(result.statistic, 1.0);
    if (result.separable) result.p_value = std::min(result.p_value, 1e-7);
    return result;
}

} // namespace timedrs
