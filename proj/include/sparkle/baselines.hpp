#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sparkle/common.hpp"
#include "sparkle/environments.hpp"
#include "sparkle/kernel.hpp"
#include "sparkle/policy.hpp"

namespace sparkle {

/// Unimplementable benchmark with full knowledge of the reward functions;
/// used by the harness for zero-regret sanity runs.
class OraclePolicy : public Policy {
public:
    explicit OraclePolicy(const Environment& env) : env_(env) {}
    int choose(const Eigen::VectorXd& x, RandomStream&) override {
        return env_.oracle(x).first;
    }
    void update(const Eigen::VectorXd&, int, double) override {}
    std::string name() const override { return "oracle"; }

private:
    const Environment& env_;
};

namespace detail {

/// Cyclic coordinate-descent lasso on (1/(2n))|y - X b|^2 + lambda |b_{-0}|_1
/// with an unpenalized intercept in column 0. Warm-startable.
class LassoSolver {
public:
    void solve(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
               Eigen::VectorXd& beta, double tol = 1e-7, int max_iters = 1000) {
        const int n = static_cast<int>(X.rows());
        const int p = static_cast<int>(X.cols());
        if (beta.size() != p) beta = Eigen::VectorXd::Zero(p);
        Eigen::VectorXd col_sq(p);
        for (int j = 0; j < p; ++j) col_sq[j] = X.col(j).squaredNorm() / n;
        Eigen::VectorXd residual = y - X * beta;
        for (int it = 0; it < max_iters; ++it) {
            double max_delta = 0.0;
            for (int j = 0; j < p; ++j) {
                if (col_sq[j] <= 0.0) continue;
                const double old = beta[j];
                const double rho = X.col(j).dot(residual) / n + col_sq[j] * old;
                double next;
                if (j == 0) {
                    next = rho / col_sq[j];
                } else {
                    const double shrunk = std::max(std::abs(rho) - lambda, 0.0);
                    next = (rho > 0 ? shrunk : -shrunk) / col_sq[j];
                }
                if (next != old) {
                    residual += X.col(j) * (old - next);
                    beta[j] = next;
                    max_delta = std::max(max_delta, std::abs(next - old));
                }
            }
            if (max_delta <= tol) break;
        }
    }
};

} // namespace detail

/// Forced-sampling lasso bandit on per-coordinate monomial features
/// {x_(j)^p : j <= d, p <= degree} plus an intercept (dimension d*degree+1).
/// Arms are force-sampled on the doubling schedule; otherwise the forced-
/// sample estimates preselect arms within h0/2 of the best and the
/// all-sample estimate picks among them.
class LassoBandit : public Policy {
public:
    LassoBandit(int K, int d, int degree = 10, int q0 = 1, double h0 = 5.0,
                double lambda1 = 0.01, double lambda20 = 0.01,
                double feature_scale = 5.0)
        : K_(K), d_(d), degree_(degree), q0_(q0), h0_(h0), lambda1_(lambda1),
          lambda20_(lambda20), feature_scale_(feature_scale) {
        if (K < 1 || d < 1 || q0 < 1) throw ConfigError("lasso_bandit: bad K/d/q0");
        if (degree < 1) throw ConfigError("lasso_bandit: degree must be >= 1");
        const long long p = static_cast<long long>(d) * degree + 1;
        if (p > 2'000'000)
            throw ConfigError("lasso_bandit: feature dimension " + std::to_string(p) +
                              " is too large");
        p_ = static_cast<int>(p);
        // monomials of U(-scale, scale) are normalized by their RMS so the
        // design stays numerically balanced at high degree
        scales_.resize(degree_ + 1);
        for (int pw = 1; pw <= degree_; ++pw)
            scales_[pw] = std::pow(feature_scale_, pw) / std::sqrt(2.0 * pw + 1.0);
        forced_X_.resize(K_);
        forced_y_.resize(K_);
        all_X_.resize(K_);
        all_y_.resize(K_);
        beta_forced_.assign(K_, Eigen::VectorXd::Zero(p_));
        beta_all_.assign(K_, Eigen::VectorXd::Zero(p_));
    }

    int feature_dim() const { return p_; }

    /// Forced arm at 1-based time t, or -1 when the step is free.
    int forced_arm_at(long long t) const {
        const long long block = static_cast<long long>(K_) * q0_;
        for (int n = 0; n < 63; ++n) {
            const long long start = ((1LL << n) - 1) * block;
            if (t <= start) break;
            if (t <= start + block) {
                const long long j = t - start; // 1..K*q0
                return static_cast<int>((j - 1) / q0_);
            }
        }
        return -1;
    }

    int choose(const Eigen::VectorXd& x, RandomStream&) override {
        const long long t = t_ + 1;
        const int forced = forced_arm_at(t);
        if (forced >= 0) return forced;

        const Eigen::VectorXd phi = features(x);
        double best_forced = -std::numeric_limits<double>::infinity();
        std::vector<double> forced_value(K_);
        for (int k = 0; k < K_; ++k) {
            forced_value[k] = forced_y_[k].empty()
                                  ? -std::numeric_limits<double>::infinity()
                                  : phi.dot(beta_forced_[k]);
            best_forced = std::max(best_forced, forced_value[k]);
        }
        int best_arm = 0;
        double best_value = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < K_; ++k) {
            if (forced_value[k] < best_forced - h0_ / 2.0) continue;
            const double v = all_y_[k].empty()
                                 ? -std::numeric_limits<double>::infinity()
                                 : phi.dot(beta_all_[k]);
            if (v > best_value) {
                best_value = v;
                best_arm = k;
            }
        }
        return best_arm;
    }

    void update(const Eigen::VectorXd& x, int arm, double reward) override {
        const long long t = ++t_;
        const Eigen::VectorXd phi = features(x);
        all_X_[arm].push_back(phi);
        all_y_[arm].push_back(reward);
        if (forced_arm_at(t) == arm) {
            forced_X_[arm].push_back(phi);
            forced_y_[arm].push_back(reward);
            refit(forced_X_[arm], forced_y_[arm], lambda1_, beta_forced_[arm]);
        }
        const double lambda2 =
            lambda20_ * std::sqrt((std::log(static_cast<double>(t)) + std::log(p_)) /
                                  static_cast<double>(t));
        refit(all_X_[arm], all_y_[arm], lambda2, beta_all_[arm]);
    }

    std::string name() const override { return "lasso_bandit"; }

private:
    Eigen::VectorXd features(const Eigen::VectorXd& x) const {
        if (x.size() != d_) throw InputError("lasso_bandit: dimension mismatch");
        Eigen::VectorXd phi(p_);
        phi[0] = 1.0;
        int idx = 1;
        for (int j = 0; j < d_; ++j) {
            double pw = 1.0;
            for (int deg = 1; deg <= degree_; ++deg) {
                pw *= x[j];
                phi[idx++] = pw / scales_[deg];
            }
        }
        return phi;
    }

    void refit(const std::vector<Eigen::VectorXd>& rows,
               const std::vector<double>& ys, double lambda,
               Eigen::VectorXd& beta) {
        const int n = static_cast<int>(rows.size());
        if (n == 0) return;
        Eigen::MatrixXd X(n, p_);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            X.row(i) = rows[i].transpose();
            y[i] = ys[i];
        }
        solver_.solve(X, y, lambda, beta);
    }

    int K_, d_, degree_, q0_;
    double h0_, lambda1_, lambda20_, feature_scale_;
    int p_ = 0;
    std::vector<double> scales_;
    std::vector<std::vector<Eigen::VectorXd>> forced_X_, all_X_;
    std::vector<std::vector<double>> forced_y_, all_y_;
    std::vector<Eigen::VectorXd> beta_forced_, beta_all_;
    detail::LassoSolver solver_;
    long long t_ = 0;
};

/// Per-arm k-nearest-neighbor estimate plus an uncertainty bonus
/// theta sqrt(log t / k_t), with k_t = ceil(t^{2/(2+d)}) capped at the
/// arm's history size. Unsampled arms have infinite index; ties go to the
/// lowest arm.
class KnnUcb : public Policy {
public:
    KnnUcb(int K, int d, double theta = 2.0) : K_(K), d_(d), theta_(theta) {
        if (K < 1 || d < 1) throw ConfigError("knn_ucb: bad K/d");
        if (!(theta > 0.0)) throw ConfigError("knn_ucb: theta must be positive");
        history_x_.resize(K_);
        history_y_.resize(K_);
    }

    int choose(const Eigen::VectorXd& x, RandomStream&) override {
        const long long t = t_ + 1;
        int best_arm = 0;
        double best_value = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < K_; ++k) {
            double value;
            if (history_y_[k].empty()) {
                value = std::numeric_limits<double>::infinity();
            } else {
                const auto n = static_cast<long long>(history_y_[k].size());
                const long long want = static_cast<long long>(std::ceil(
                    std::pow(static_cast<double>(t), 2.0 / (2.0 + d_))));
                const long long kt = std::max<long long>(1, std::min(want, n));
                value = knn_mean(k, x, kt) +
                        theta_ * std::sqrt(std::log(static_cast<double>(t)) /
                                           static_cast<double>(kt));
            }
            if (value > best_value) {
                best_value = value;
                best_arm = k;
            }
        }
        return best_arm;
    }

    void update(const Eigen::VectorXd& x, int arm, double reward) override {
        history_x_[arm].push_back(x);
        history_y_[arm].push_back(reward);
        ++t_;
    }

    std::string name() const override { return "knn_ucb"; }

private:
    double knn_mean(int arm, const Eigen::VectorXd& x, long long kt) const {
        const auto& hx = history_x_[arm];
        const auto& hy = history_y_[arm];
        std::vector<std::pair<double, int>> dist(hx.size());
        for (std::size_t i = 0; i < hx.size(); ++i)
            dist[i] = {(hx[i] - x).squaredNorm(), static_cast<int>(i)};
        std::nth_element(dist.begin(), dist.begin() + (kt - 1), dist.end());
        double sum = 0.0;
        for (long long i = 0; i < kt; ++i) sum += hy[dist[i].second];
        return sum / static_cast<double>(kt);
    }

    int K_, d_;
    double theta_;
    std::vector<std::vector<Eigen::VectorXd>> history_x_;
    std::vector<std::vector<double>> history_y_;
    long long t_ = 0;
};

enum class KrrVariant { Naive, Additive };

namespace detail {

inline double krr_kernel(const KernelSpec& spec, KrrVariant variant,
                         const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (variant == KrrVariant::Additive) {
        double total = 0.0;
        for (int j = 0; j < a.size(); ++j) total += eval_kernel(spec, a[j], b[j]);
        return total;
    }
    // product kernel: variance * prod_j rho(|a_j - b_j| / l)
    double corr = 1.0;
    const double nu = spec.nu();
    for (int j = 0; j < a.size(); ++j) {
        const double z = std::sqrt(2.0 * nu) * std::abs(a[j] - b[j]) / spec.lengthscale;
        corr *= sparkle::detail::matern_correlation_scaled(nu, z);
    }
    return spec.variance * corr;
}

} // namespace detail

/// Kernel ridge fit of one epoch sample: alpha = (K + lambda0 I)^{-1} y,
/// ridge weight lambda0/n against the (1/n)-normalized loss. Singular
/// systems get one jittered retry, then fail.
inline Predictor krr_fit(const SampleBatch& batch, const KernelSpec& spec,
                         KrrVariant variant, double lambda0) {
    batch.validate();
    if (!(lambda0 > 0.0)) throw ConfigError("krr: lambda0 must be positive");
    const int n = batch.n();
    Eigen::MatrixXd K(n, n);
    for (int i = 0; i < n; ++i)
        for (int l = 0; l <= i; ++l) {
            const double v = detail::krr_kernel(spec, variant,
                                                batch.covariates.row(i).transpose(),
                                                batch.covariates.row(l).transpose());
            K(i, l) = v;
            K(l, i) = v;
        }
    Eigen::MatrixXd system = K + lambda0 * Eigen::MatrixXd::Identity(n, n);
    Eigen::LLT<Eigen::MatrixXd> llt(system);
    if (llt.info() != Eigen::Success) {
        system.diagonal().array() += 1e-8 * spec.variance * n;
        llt.compute(system);
        if (llt.info() != Eigen::Success)
            throw InputError("krr: singular system after jittered retry");
    }
    auto alpha = std::make_shared<Eigen::VectorXd>(llt.solve(batch.responses));
    auto anchors = std::make_shared<Eigen::MatrixXd>(batch.covariates);
    return Predictor([alpha, anchors, spec, variant](const Eigen::VectorXd& x) {
        double value = 0.0;
        for (int i = 0; i < anchors->rows(); ++i)
            value += (*alpha)[i] *
                     detail::krr_kernel(spec, variant, x, anchors->row(i).transpose());
        return value;
    });
}

/// KRR bandit: the epoch/screening skeleton with the doubly penalized fit
/// replaced by naive (product-kernel) or additive kernel ridge regression.
inline std::unique_ptr<EpochScreeningPolicy> make_krr_policy(
    int num_arms, int dim, long long T, int s0, double m, double C1,
    const KernelSpec& kernel, KrrVariant variant, double lambda0 = 0.01) {
    EpochSchedule sched = build_epoch_schedule(T, dim, s0, m, C1);
    KernelSpec spec = kernel;
    EpochFitter fitter = [spec, variant, lambda0](const SampleBatch& batch,
                                                  int) -> std::optional<Predictor> {
        return krr_fit(batch, spec, variant, lambda0);
    };
    const std::string name =
        variant == KrrVariant::Naive ? "krr_naive" : "krr_additive";
    return std::make_unique<EpochScreeningPolicy>(name, num_arms, dim,
                                                  std::move(sched),
                                                  std::move(fitter));
}

} // namespace sparkle
