#pragma once

#include <functional>
#include <optional>

#include <Eigen/Core>

namespace zvis {

using State = Eigen::VectorXd;

/// Stationary Markov feedback control u(x) with an optional magnitude clip.
struct FeedbackPolicy {
    std::function<void(const State&, Eigen::Ref<Eigen::VectorXd>)> control;
    std::optional<double> bound;
    bool is_zero = false;

    static FeedbackPolicy zero() {
        FeedbackPolicy p;
        p.is_zero = true;
        return p;
    }

    /// Evaluate into `u`, clipping |u| to `bound` when set.
    void eval(const State& x, Eigen::Ref<Eigen::VectorXd> u) const {
        if (is_zero || !control) {
            u.setZero();
            return;
        }
        control(x, u);
        if (bound) {
            const double norm = u.norm();
            if (norm > *bound && norm > 0.0) u *= (*bound / norm);
        }
    }

    FeedbackPolicy clipped(double cap) const {
        FeedbackPolicy p = *this;
        p.bound = cap;
        return p;
    }
};

} // namespace zvis
