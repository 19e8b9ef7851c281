#pragma once
// Negative log partial likelihood of the Cox proportional-hazards model with
// Breslow handling of tied event times, plus the analytic per-sample gradient
// and (diagonal) Hessian used by second-order boosting.
//
// With risk set R(t) = {j : t_j >= t} and D(t) = sum_{j in R(t)} exp(s_j):
//   nll      = -sum_{events i} [ s_i - log D(t_i) ]
//   grad_k   = exp(s_k) * A_k - 1{event_k}
//   hess_k   = exp(s_k) * A_k - exp(2 s_k) * B_k
// where A_k = sum over event times tau <= t_k of d_tau / D(tau) and
// B_k uses 1 / D(tau)^2. Scores are shifted by their maximum before
// exponentiation; every ratio is shift-invariant.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "timedrs/common.hpp"

namespace timedrs {

class CoxObjectiveState {
public:
    static CoxObjectiveState create(std::span<const double> times,
                                    std::span<const std::uint8_t> events) {
        if (times.size() != events.size())
            throw ValidationError("times and events must have equal length");
        CoxObjectiveState s;
        s.times_.assign(times.begin(), times.end());
        s.events_.assign(events.begin(), events.end());
        for (const double t : s.times_)
            if (!std::isfinite(t)) throw ValidationError("survival times must be finite");

        s.order_.resize(s.times_.size());
        std::iota(s.order_.begin(), s.order_.end(), 0);
        std::sort(s.order_.begin(), s.order_.end(), [&](int a, int b) {
            if (s.times_[static_cast<std::size_t>(a)] != s.times_[static_cast<std::size_t>(b)])
                return s.times_[static_cast<std::size_t>(a)] > s.times_[static_cast<std::size_t>(b)];
            return a < b;
        });

        // contiguous runs of equal time, in descending time order
        std::size_t i = 0;
        while (i < s.order_.size()) {
            std::size_t j = i;
            int n_events = 0;
            const double t = s.times_[static_cast<std::size_t>(s.order_[i])];
            while (j < s.order_.size() && s.times_[static_cast<std::size_t>(s.order_[j])] == t) {
                n_events += s.events_[static_cast<std::size_t>(s.order_[j])] != 0;
                ++j;
            }
            s.groups_.push_back({static_cast<int>(i), static_cast<int>(j - i), n_events});
            i = j;
        }
        s.n_events_ = 0;
        for (const auto e : s.events_) s.n_events_ += e != 0;
        return s;
    }

    int n() const { return static_cast<int>(times_.size()); }
    int n_events() const { return n_events_; }
    const std::vector<double>& times() const { return times_; }
    const std::vector<std::uint8_t>& events() const { return events_; }

    double neg_log_partial_likelihood(std::span<const double> scores) const {
        check_scores(scores);
        double shift = scores[0];
        for (const double s : scores) shift = std::max(shift, s);

        double nll = 0.0;
        double cumexp = 0.0;
        for (const auto& g : groups_) {
            for (int k = 0; k < g.count; ++k) {
                const int idx = order_[static_cast<std::size_t>(g.first + k)];
                cumexp += std::exp(scores[static_cast<std::size_t>(idx)] - shift);
            }
            if (g.n_events == 0) continue;
            const double log_denom = shift + std::log(cumexp);
            for (int k = 0; k < g.count; ++k) {
                const int idx = order_[static_cast<std::size_t>(g.first + k)];
                if (events_[static_cast<std::size_t>(idx)])
                    nll -= scores[static_cast<std::size_t>(idx)] - log_denom;
            }
        }
        return nll;
    }

    void gradient_hessian(std::span<const double> scores, std::span<double> grad,
                          std::span<double> hess) const {
        check_scores(scores);
        double shift = scores[0];
        for (const double s : scores) shift = std::max(shift, s);

        // denominators per time group, descending time
        std::vector<double> denom(groups_.size());
        double cumexp = 0.0;
        for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
            const auto& g = groups_[gi];
            for (int k = 0; k < g.count; ++k) {
                const int idx = order_[static_cast<std::size_t>(g.first + k)];
                cumexp += std::exp(scores[static_cast<std::size_t>(idx)] - shift);
            }
            denom[gi] = cumexp;
        }

        // ascending-time prefix sums of d/D and d/D^2; a sample at group gi is
        // in the risk set of every event at the same or an earlier time.
        double cum_a = 0.0, cum_b = 0.0;
        for (std::size_t gi = groups_.size(); gi-- > 0;) {
            const auto& g = groups_[gi];
            if (g.n_events > 0) {
                cum_a += static_cast<double>(g.n_events) / denom[gi];
                cum_b += static_cast<double>(g.n_events) / (denom[gi] * denom[gi]);
            }
            for (int k = 0; k < g.count; ++k) {
                const int idx = order_[static_cast<std::size_t>(g.first + k)];
                const double e = std::exp(scores[static_cast<std::size_t>(idx)] - shift);
                const double ea = e * cum_a;
                grad[static_cast<std::size_t>(idx)] =
                    ea - (events_[static_cast<std::size_t>(idx)] ? 1.0 : 0.0);
                hess[static_cast<std::size_t>(idx)] = std::max(0.0, ea - e * e * cum_b);
            }
        }
    }

private:
    struct TimeGroup {
        int first = 0;    // offset into order_
        int count = 0;
        int n_events = 0;
    };

    void check_scores(std::span<const double> scores) const {
        if (static_cast<int>(scores.size()) != n())
            throw ValidationError("score vector length mismatch");
        if (n_events_ == 0)
            throw UndefinedStatisticError("Cox partial likelihood undefined without events");
        for (const double s : scores)
            if (!std::isfinite(s)) throw ValidationError("scores must be finite");
    }

    std::vector<double> times_;
    std::vector<std::uint8_t> events_;
    std::vector<int> order_;          // indices by descending time
    std::vector<TimeGroup> groups_;   // tied-time runs, descending
    int n_events_ = 0;
};

inline double cox_neg_log_partial_likelihood(std::span<const double> scores,
                                             const CoxObjectiveState& state) {
    return state.neg_log_partial_likelihood(scores);
}

struct CoxDerivatives {
    std::vector<double> grad;
    std::vector<double> hess;
};

inline CoxDerivatives cox_gradient_hessian(std::span<const double> scores,
                                           const CoxObjectiveState& state) {
    CoxDerivatives d;
    d.grad.resize(scores.size());
    d.hess.resize(scores.size());
    state.gradient_hessian(scores, d.grad, d.hess);
    return d;
}

} // namespace timedrs
