#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sparkle/additive_model.hpp"
#include "sparkle/common.hpp"
#include "sparkle/dp_estimator.hpp"
#include "sparkle/environments.hpp"
#include "sparkle/epochs.hpp"
#include "sparkle/rng.hpp"
#include "sparkle/screening.hpp"

namespace sparkle {

/// Common policy contract: observe context, choose arm, receive reward.
class Policy {
public:
    virtual ~Policy() = default;
    virtual int choose(const Eigen::VectorXd& x, RandomStream& rng) = 0;
    virtual void update(const Eigen::VectorXd& x, int arm, double reward) = 0;
    virtual std::string name() const = 0;

    /// Candidate-set sizes after each screening round of the last choose();
    /// empty for policies without screening.
    virtual const std::vector<int>& last_candidate_sizes() const {
        static const std::vector<int> none;
        return none;
    }
    virtual int current_epoch() const { return 0; }
    virtual long long unfit_pass_events() const { return 0; }
};

struct TraceStep {
    long long t = 0; // 1-based step
    int epoch = 0;   // 1-based epoch (0 for non-epoch policies)
    Eigen::VectorXd x;
    std::vector<int> candidate_sizes; // after each screening round
    int candidate_size = 0;           // final candidate-set size
    int arm = 0;                      // 0-based
    double reward = 0.0;
    int oracle_arm = 0;
    double regret = 0.0;
    double cum_regret = 0.0;
};

struct PolicyTrace {
    std::string policy;
    std::uint64_t seed = 0;
    std::vector<TraceStep> steps;
    long long unfit_pass_events = 0;

    double final_regret() const {
        return steps.empty() ? 0.0 : steps.back().cum_regret;
    }
};

/// One full bandit run. The stream drives context sampling, reward noise,
/// and the policy's own randomization, in that fixed per-step order, so a
/// seed pins the whole trajectory.
inline PolicyTrace run_policy(const Environment& env, Policy& policy, long long T,
                              std::uint64_t seed) {
    if (env.num_arms() < 1) throw InputError("run_policy: environment has no arms");
    RandomStream rng(seed);
    PolicyTrace trace;
    trace.policy = policy.name();
    trace.seed = seed;
    trace.steps.reserve(static_cast<std::size_t>(T));
    double cum = 0.0;
    for (long long t = 1; t <= T; ++t) {
        TraceStep step;
        step.t = t;
        step.x = env.sample_context(rng);
        step.arm = policy.choose(step.x, rng);
        step.epoch = policy.current_epoch();
        step.candidate_sizes = policy.last_candidate_sizes();
        step.candidate_size = step.candidate_sizes.empty()
                                  ? env.num_arms()
                                  : step.candidate_sizes.back();
        step.reward = env.draw_reward(step.arm, step.x, rng);
        policy.update(step.x, step.arm, step.reward);
        const auto [oracle_arm, oracle_value] = env.oracle(step.x);
        step.oracle_arm = oracle_arm;
        step.regret = oracle_value - env.mean_reward(step.arm, step.x);
        cum += step.regret;
        step.cum_regret = cum;
        trace.steps.push_back(std::move(step));
    }
    trace.unfit_pass_events = policy.unfit_pass_events();
    return trace;
}

/// Maps an arm's epoch sample to a reward predictor; disengaged result
/// marks the arm unfit for that epoch. The epoch index is 1-based.
using EpochFitter =
    std::function<std::optional<Predictor>(const SampleBatch&, int epoch)>;

/// Epoch-screening skeleton: the horizon is split into epochs, the
/// arm-selection rule is frozen within an epoch (sequential screening
/// against all previous epochs' estimators, then a uniform draw from the
/// candidates), and per-arm estimators are refit from the epoch's own data
/// when it ends. The final epoch's fit is skipped; nothing would use it.
class EpochScreeningPolicy : public Policy {
public:
    EpochScreeningPolicy(std::string name, int num_arms, int dim,
                         EpochSchedule schedule, EpochFitter fitter)
        : name_(std::move(name)), num_arms_(num_arms), dim_(dim),
          schedule_(std::move(schedule)), fitter_(std::move(fitter)),
          bank_(num_arms), arm_x_(num_arms), arm_y_(num_arms), arm_t_(num_arms) {
        if (num_arms < 1) throw ConfigError("EpochScreeningPolicy: K must be >= 1");
    }

    int choose(const Eigen::VectorXd& x, RandomStream& rng) override {
        ScreenResult res = screen_detailed(x, bank_, bank_.completed_epochs());
        last_sizes_ = std::move(res.sizes_after_round);
        unfit_passes_ += res.unfit_passes;
        const auto pick = rng.uniform_index(res.candidates.size());
        return res.candidates[static_cast<std::size_t>(pick)];
    }

    void update(const Eigen::VectorXd& x, int arm, double reward) override {
        arm_x_[arm].push_back(x);
        arm_y_[arm].push_back(reward);
        arm_t_[arm].push_back(t_ + 1);
        ++t_;
        ++steps_in_epoch_;
        if (steps_in_epoch_ == schedule_.tau[epoch_]) {
            if (epoch_ + 1 < schedule_.Q) finish_epoch();
            for (auto& v : arm_x_) v.clear();
            for (auto& v : arm_y_) v.clear();
            for (auto& v : arm_t_) v.clear();
            steps_in_epoch_ = 0;
            if (epoch_ + 1 < schedule_.Q) ++epoch_;
        }
    }

    std::string name() const override { return name_; }
    const std::vector<int>& last_candidate_sizes() const override {
        return last_sizes_;
    }
    int current_epoch() const override { return epoch_ + 1; }
    long long unfit_pass_events() const override { return unfit_passes_; }

    const EstimatorBank& bank() const { return bank_; }
    const EpochSchedule& epoch_schedule() const { return schedule_; }

private:
    void finish_epoch() {
        EpochEstimators fits;
        fits.eps = schedule_.eps[epoch_];
        fits.per_arm.resize(num_arms_);
        for (int k = 0; k < num_arms_; ++k) {
            const auto n = static_cast<int>(arm_y_[k].size());
            if (n == 0) continue; // unfit marker
            SampleBatch batch;
            batch.covariates.resize(n, dim_);
            batch.responses.resize(n);
            batch.index_set.assign(arm_t_[k].begin(), arm_t_[k].end());
            for (int i = 0; i < n; ++i) {
                batch.covariates.row(i) = arm_x_[k][i].transpose();
                batch.responses[i] = arm_y_[k][i];
            }
            fits.per_arm[k] = fitter_(batch, epoch_ + 1);
        }
        bank_.push_epoch(std::move(fits));
    }

    std::string name_;
    int num_arms_;
    int dim_;
    EpochSchedule schedule_;
    EpochFitter fitter_;
    EstimatorBank bank_;
    std::vector<std::vector<Eigen::VectorXd>> arm_x_;
    std::vector<std::vector<double>> arm_y_;
    std::vector<std::vector<long long>> arm_t_;
    long long t_ = 0;
    long long steps_in_epoch_ = 0;
    int epoch_ = 0;
    std::vector<int> last_sizes_;
    long long unfit_passes_ = 0;
};

struct SparkleSettings {
    long long T = 0;
    int s0 = 1;
    double m = 2.5;
    double C1 = 7e-5;
    RegularizationSchedule reg;
    KernelSpec kernel;
    FitOptions fit;
};

/// SPARKLE: the epoch-screening skeleton with end-of-epoch doubly penalized
/// fits, regularization tuned per arm from its epoch sample size with
/// delta = 1/T.
inline std::unique_ptr<EpochScreeningPolicy> make_sparkle_policy(
    int num_arms, int dim, const SparkleSettings& settings) {
    if (settings.T < 3) throw ConfigError("sparkle: T must be >= 3");
    if (num_arms < 2) throw ConfigError("sparkle: K must be >= 2");
    EpochSchedule sched = build_epoch_schedule(settings.T, dim, settings.s0,
                                               settings.m, settings.C1);
    RegularizationSchedule reg = settings.reg;
    reg.m = settings.m;
    const double delta = 1.0 / static_cast<double>(settings.T);
    KernelSpec kernel = settings.kernel;
    FitOptions fit = settings.fit;
    const int d = dim;
    EpochFitter fitter = [reg, delta, kernel, fit, d](const SampleBatch& batch,
                                                      int) -> std::optional<Predictor> {
        const RegularizationPair pair =
            schedule(batch.n(), d, delta, reg);
        auto [f, report] = fit_doubly_penalized(batch, pair, kernel, fit);
        auto shared = std::make_shared<AdditiveFunction>(std::move(f));
        return Predictor([shared](const Eigen::VectorXd& x) {
            return shared->evaluate(x);
        });
    };
    return std::make_unique<EpochScreeningPolicy>("sparkle", num_arms, dim,
                                                  std::move(sched),
                                                  std::move(fitter));
}

/// Full SPARKLE run against an environment.
inline PolicyTrace run_sparkle(const Environment& env,
                               const SparkleSettings& settings,
                               std::uint64_t seed) {
    auto policy = make_sparkle_policy(env.num_arms(), env.dim(), settings);
    return run_policy(env, *policy, settings.T, seed);
}

} // namespace sparkle
