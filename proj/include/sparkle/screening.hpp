#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "sparkle/common.hpp"

namespace sparkle {

using Predictor = std::function<double(const Eigen::VectorXd&)>;

/// Fitted reward estimators of one completed epoch, one slot per arm.
/// A disengaged slot marks an arm that collected no samples in that epoch
/// ("unfit"); such arms pass the corresponding screening round untested.
struct EpochEstimators {
    std::vector<std::optional<Predictor>> per_arm;
    double eps = 0.0;
};

/// Estimators of all completed epochs, in order. Each epoch's entry is
/// immutable once pushed.
class EstimatorBank {
public:
    explicit EstimatorBank(int num_arms) : num_arms_(num_arms) {
        if (num_arms < 1) throw InputError("EstimatorBank: need at least one arm");
    }

    int num_arms() const { return num_arms_; }
    int completed_epochs() const { return static_cast<int>(rounds_.size()); }
    const EpochEstimators& round(int h) const { return rounds_.at(h); }

    void push_epoch(EpochEstimators e) {
        if (static_cast<int>(e.per_arm.size()) != num_arms_)
            throw InputError("EstimatorBank: estimator count != arm count");
        rounds_.push_back(std::move(e));
    }

private:
    int num_arms_;
    std::vector<EpochEstimators> rounds_;
};

struct ScreenResult {
    std::vector<int> candidates;          // surviving arms, ascending
    std::vector<int> sizes_after_round;   // |K_h| after each evaluated round
    long long unfit_passes = 0;           // arms passed untested for lack of a fit
};

/// Sequential screening: start from all arms; for each completed epoch
/// h = 1..upto keep the arms whose estimate is within eps_h of the round's
/// maximum. Exits early once a single arm remains. The round maximum is
/// taken over fitted arms only; unfit arms are retained without a test.
/// Never returns an empty set: the arm achieving the max always passes.
inline ScreenResult screen_detailed(const Eigen::VectorXd& x,
                                    const EstimatorBank& bank, int upto) {
    if (upto > bank.completed_epochs())
        throw InputError("screen: upto exceeds completed epochs");
    ScreenResult result;
    result.candidates.resize(bank.num_arms());
    for (int k = 0; k < bank.num_arms(); ++k) result.candidates[k] = k;

    for (int h = 0; h < upto; ++h) {
        if (result.candidates.size() == 1) break;
        const EpochEstimators& round = bank.round(h);
        std::vector<double> values(result.candidates.size());
        double max_fitted = -std::numeric_limits<double>::infinity();
        bool any_fitted = false;
        for (std::size_t idx = 0; idx < result.candidates.size(); ++idx) {
            const auto& est = round.per_arm[result.candidates[idx]];
            if (est.has_value()) {
                values[idx] = (*est)(x);
                max_fitted = std::max(max_fitted, values[idx]);
                any_fitted = true;
            } else {
                values[idx] = std::numeric_limits<double>::quiet_NaN();
            }
        }
        if (any_fitted) {
            std::vector<int> next;
            next.reserve(result.candidates.size());
            for (std::size_t idx = 0; idx < result.candidates.size(); ++idx) {
                if (std::isnan(values[idx])) {
                    next.push_back(result.candidates[idx]);
                    ++result.unfit_passes;
                } else if (values[idx] >= max_fitted - round.eps) {
                    next.push_back(result.candidates[idx]);
                }
            }
            result.candidates = std::move(next);
        } else {
            result.unfit_passes += static_cast<long long>(result.candidates.size());
        }
        result.sizes_after_round.push_back(
            static_cast<int>(result.candidates.size()));
    }
    return result;
}

inline std::vector<int> screen(const Eigen::VectorXd& x, const EstimatorBank& bank,
                               int upto) {
    return screen_detailed(x, bank, upto).candidates;
}

} // namespace sparkle
