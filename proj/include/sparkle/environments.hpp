#pragma once

#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "sparkle/common.hpp"
#include "sparkle/rng.hpp"

namespace sparkle {

/// Reward-generating process: contexts, per-arm mean rewards, noisy draws.
/// Immutable after construction; callers own the random streams.
class Environment {
public:
    virtual ~Environment() = default;

    virtual int num_arms() const = 0;
    virtual int dim() const = 0;
    virtual double noise_var() const = 0;
    virtual Eigen::VectorXd sample_context(RandomStream& rng) const = 0;
    virtual double mean_reward(int arm, const Eigen::VectorXd& x) const = 0;

    double draw_reward(int arm, const Eigen::VectorXd& x, RandomStream& rng) const {
        const double v = noise_var();
        return mean_reward(arm, x) + (v > 0.0 ? rng.normal(0.0, std::sqrt(v)) : 0.0);
    }

    /// Best arm and its mean reward; lowest index wins exact ties.
    std::pair<int, double> oracle(const Eigen::VectorXd& x) const {
        int best = 0;
        double best_value = mean_reward(0, x);
        for (int k = 1; k < num_arms(); ++k) {
            const double v = mean_reward(k, x);
            if (v > best_value) {
                best = k;
                best_value = v;
            }
        }
        return {best, best_value};
    }
};

/// Sinusoidal sparse additive family: arm k (1-based) has mean reward
/// sum_{j=1}^{s} 2 sin(x_(j+k)) over contexts uniform on [low, high]^d.
class SineEnv : public Environment {
public:
    SineEnv(int d, int s, int K, double noise_var = 0.05, double low = -5.0,
            double high = 5.0)
        : d_(d), s_(s), K_(K), noise_var_(noise_var), low_(low), high_(high) {
        if (d < 1 || s < 1 || K < 1) throw ConfigError("SineEnv: d, s, K must be >= 1");
        if (s + K > d)
            throw ConfigError("SineEnv: need s + K <= d so index j+k stays in range");
        if (noise_var < 0.0) throw ConfigError("SineEnv: noise_var must be >= 0");
        if (!(low < high)) throw ConfigError("SineEnv: empty covariate range");
    }

    int num_arms() const override { return K_; }
    int dim() const override { return d_; }
    double noise_var() const override { return noise_var_; }
    int sparsity() const { return s_; }
    double low() const { return low_; }
    double high() const { return high_; }

    Eigen::VectorXd sample_context(RandomStream& rng) const override {
        Eigen::VectorXd x(d_);
        for (int j = 0; j < d_; ++j) x[j] = rng.uniform(low_, high_);
        return x;
    }

    double mean_reward(int arm, const Eigen::VectorXd& x) const override {
        if (arm < 0 || arm >= K_) throw InputError("SineEnv: arm out of range");
        if (x.size() != d_) throw InputError("SineEnv: context dimension mismatch");
        // paper indexing is 1-based: arm k uses coordinates j+k, j=1..s
        double total = 0.0;
        for (int j = 1; j <= s_; ++j) total += 2.0 * std::sin(x[j + arm]);
        return total;
    }

private:
    int d_, s_, K_;
    double noise_var_, low_, high_;
};

/// Smooth transition bump: u(x) = 1 on [0, 1/4], 0 on [1/2, inf),
/// nonincreasing and infinitely differentiable in between, computed as the
/// normalized tail integral of exp(-1/((1/2-t)(t-1/4))).
inline double bump_u(double x) {
    if (x < 0.0) throw InputError("bump_u: argument must be >= 0");
    if (x <= 0.25) return 1.0;
    if (x >= 0.5) return 0.0;
    auto integrand = [](double t) {
        const double a = 0.5 - t;
        const double b = t - 0.25;
        if (a <= 0.0 || b <= 0.0) return 0.0;
        const double e = 1.0 / (a * b);
        return e > 700.0 ? 0.0 : std::exp(-e);
    };
    using quad = boost::math::quadrature::gauss_kronrod<double, 61>;
    static const double normalizer =
        quad::integrate(integrand, 0.25, 0.5, 15, 1e-13);
    const double tail = quad::integrate(integrand, x, 0.5, 15, 1e-13);
    return std::min(1.0, std::max(0.0, tail / normalizer));
}

/// Two-armed adversarial instance built from signed bump perturbations of a
/// flat reward 1/2: arm 1 has mean eta_1^sigma, arm 2 has mean 1/2 exactly.
/// dim()==1 uses q = ceil(T^{1/(2m+1)}), N = floor(q^{1-alpha m}) bumps on a
/// length-1/q grid; dim d > 1 uses the grid of cell centers with
/// q = ceil(T^{1/(2m+d)}) and N = floor(q^{d-alpha m}). Contexts are uniform
/// on [0,1]^d and the bump height is q^{-m}.
class LowerBoundEnv : public Environment {
public:
    LowerBoundEnv(long long T, double m, double alpha, int d = 1,
                  double noise_var = 0.24,
                  std::vector<int> signs = {}, std::uint64_t sign_seed = 0)
        : T_(T), m_(m), alpha_(alpha), d_(d), noise_var_(noise_var) {
        if (T < 2) throw ConfigError("LowerBoundEnv: T must be >= 2");
        if (!(m > 1.5)) throw ConfigError("LowerBoundEnv: m must exceed 3/2");
        if (d < 1) throw ConfigError("LowerBoundEnv: d must be >= 1");
        if (!(alpha > 0.0) || alpha * m > static_cast<double>(d))
            throw ConfigError("LowerBoundEnv: need 0 < alpha with alpha*m <= d");
        if (!(noise_var > 2.0 / 9.0 && noise_var < 0.25))
            throw ConfigError("LowerBoundEnv: noise_var must lie in (2/9, 1/4)");

        q_ = static_cast<long long>(
            std::ceil(std::pow(static_cast<double>(T), 1.0 / (2.0 * m + d))));
        const double n_raw = std::pow(static_cast<double>(q_),
                                      static_cast<double>(d) - alpha * m);
        num_bumps_ = static_cast<long long>(std::floor(n_raw));
        if (num_bumps_ < 1) num_bumps_ = 1;
        const double cells = std::pow(static_cast<double>(q_), d);
        if (static_cast<double>(num_bumps_) > cells)
            num_bumps_ = static_cast<long long>(cells);

        if (!signs.empty()) {
            if (static_cast<long long>(signs.size()) != num_bumps_)
                throw ConfigError("LowerBoundEnv: sign vector length must be N = " +
                                  std::to_string(num_bumps_));
            for (int s : signs)
                if (s != 1 && s != -1)
                    throw ConfigError("LowerBoundEnv: signs must be +1 or -1");
            signs_ = std::move(signs);
        } else {
            RandomStream rng(sign_seed);
            signs_.resize(num_bumps_);
            for (auto& s : signs_) s = rng.uniform01() < 0.5 ? -1 : 1;
        }
    }

    int num_arms() const override { return 2; }
    int dim() const override { return d_; }
    double noise_var() const override { return noise_var_; }
    long long grid_q() const { return q_; }
    long long num_bumps() const { return num_bumps_; }
    const std::vector<int>& signs() const { return signs_; }
    double bump_height() const { return std::pow(static_cast<double>(q_), -m_); }

    Eigen::VectorXd sample_context(RandomStream& rng) const override {
        Eigen::VectorXd x(d_);
        for (int j = 0; j < d_; ++j) x[j] = rng.uniform(0.0, 1.0);
        return x;
    }

    double mean_reward(int arm, const Eigen::VectorXd& x) const override {
        if (arm < 0 || arm >= 2) throw InputError("LowerBoundEnv: arm out of range");
        if (x.size() != d_)
            throw InputError("LowerBoundEnv: context dimension mismatch");
        if (arm == 1) return 0.5;
        return 0.5 + signed_bump(x);
    }

private:
    /// sum_k sigma_k g_k(x); the grid cells are disjoint so at most one
    /// bump is live at any x, the one centered in x's cell.
    double signed_bump(const Eigen::VectorXd& x) const {
        long long cell_index = 0; // lexicographic over per-dim cell ids
        double scaled_dist_sq = 0.0;
        for (int j = 0; j < d_; ++j) {
            double v = std::min(std::max(x[j], 0.0), 1.0);
            long long cell = std::min<long long>(
                static_cast<long long>(std::floor(v * q_)), q_ - 1);
            const double center = (2.0 * cell + 1.0) / (2.0 * q_);
            const double dz = q_ * (x[j] - center);
            scaled_dist_sq += dz * dz;
            cell_index = cell_index * q_ + cell;
        }
        if (cell_index >= num_bumps_) return 0.0;
        const double r = std::sqrt(scaled_dist_sq);
        if (r >= 0.5) return 0.0;
        return signs_[static_cast<std::size_t>(cell_index)] * bump_height() *
               bump_u(r);
    }

    long long T_;
    double m_, alpha_;
    int d_;
    double noise_var_;
    long long q_ = 1;
    long long num_bumps_ = 1;
    std::vector<int> signs_;
};

} // namespace sparkle
