#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "sparkle/additive_model.hpp"
#include "sparkle/common.hpp"
#include "sparkle/kernel.hpp"

namespace sparkle {

/// Constants of the rate-driven regularization rule.
struct RegularizationSchedule {
    double C3 = 0.01;
    double C4 = 1.0;
    double m = 2.5;

    void validate() const {
        if (!(C3 > 0.0) || !(C4 > 0.0))
            throw ConfigError("RegularizationSchedule: C3, C4 must be positive");
        if (!(m > 1.5))
            throw ConfigError("RegularizationSchedule: m must exceed 3/2");
    }
};

struct RegularizationPair {
    double rho = 0.0;
    double lambda = 0.0;
    double w = 0.0;
    double gamma = 0.0;
};

/// Rate-matched (rho, lambda) for sample size n and dimension d at
/// confidence delta:
///   w     = max(C4^{2m/(2m+1)} n^{-m/(2m+1)}, sqrt(log(d/delta)/n))
///   gamma = min(C4^{2m/(2m+1)} n^{-m/(2m+1)}, C4 n^{-1/2} (log(d/delta)/n)^{-1/(4m)})
///   lambda = C3 (gamma + sqrt(log(d/delta)/n)),  rho = lambda * w.
inline RegularizationPair schedule(long long n, int d, double delta,
                                   const RegularizationSchedule& sched) {
    sched.validate();
    if (n < 1) throw InputError("schedule: n must be >= 1");
    if (d < 1) throw InputError("schedule: d must be >= 1");
    if (!(delta > 0.0 && delta < 0.5))
        throw InputError("schedule: delta must lie in (0, 1/2)");
    const double m = sched.m;
    const double nn = static_cast<double>(n);
    const double log_term = std::log(static_cast<double>(d) / delta);
    const double rate = std::pow(sched.C4, 2.0 * m / (2.0 * m + 1.0)) *
                        std::pow(nn, -m / (2.0 * m + 1.0));
    const double dev = std::sqrt(log_term / nn);

    RegularizationPair pair;
    pair.w = std::max(rate, dev);
    pair.gamma = std::min(rate, sched.C4 / std::sqrt(nn) *
                                    std::pow(log_term / nn, -1.0 / (4.0 * m)));
    pair.lambda = sched.C3 * (pair.gamma + dev);
    pair.rho = pair.lambda * pair.w;
    return pair;
}

struct FitReport {
    std::vector<double> objective_trajectory; // value after each sweep
    int sweeps = 0;
    bool converged = false;
    std::set<int> active_set; // pruned support of the returned function
    std::vector<double> block_kkt_residual; // per-dimension stationarity gap

    nlohmann::json to_json() const {
        return nlohmann::json{{"objective_trajectory", objective_trajectory},
                              {"sweeps", sweeps},
                              {"converged", converged},
                              {"active_set", std::vector<int>(active_set.begin(),
                                                              active_set.end())},
                              {"block_kkt_residual", block_kkt_residual}};
    }
};

struct FitOptions {
    double tol = 1e-8;       // relative objective decrease per sweep
    int max_sweeps = 500;
    int inner_max_iters = 2000;
    double inner_tol = 1e-10; // on the prox-gradient mapping, scaled
    double jitter = -1.0;     // < 0 means kernel default
    double prune_threshold = 1e-8;
};

namespace detail {

/// Eigen-factorized jittered Gram of one coordinate block. All block math
/// runs in this basis: with K = Q diag(lam) Q', the coefficient vector is
/// beta = Q diag(lam^{-1/2}) w, the fitted values are Q diag(lam^{1/2}) w,
/// the RKHS norm is |w| and the empirical norm is |diag(lam^{1/2}) w|/sqrt(n).
struct BlockBasis {
    Eigen::MatrixXd Q;
    Eigen::VectorXd lam;
    Eigen::VectorXd sqrt_lam;
    double lam_max = 0.0;

    void factor(const Eigen::MatrixXd& K) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
        if (es.info() != Eigen::Success)
            throw InputError("dp_estimator: eigendecomposition failed");
        Q = es.eigenvectors();
        lam = es.eigenvalues().cwiseMax(1e-14);
        sqrt_lam = lam.cwiseSqrt();
        lam_max = lam.maxCoeff();
    }
};

/// prox of t -> eta_c * |diag(sqrt_lam) t| at v. Zero when
/// sum v_i^2/lam_i <= eta_c^2; otherwise v_i * t/(t + eta_c lam_i) with t
/// the unique root of sum lam_i v_i^2/(t + eta_c lam_i)^2 = 1.
inline void prox_scaled_norm(const Eigen::VectorXd& v, const Eigen::VectorXd& lam,
                             double eta_c, Eigen::VectorXd& out) {
    if (eta_c <= 0.0) {
        out = v;
        return;
    }
    const double s = (v.array().square() / lam.array()).sum();
    if (s <= eta_c * eta_c) {
        out.setZero(v.size());
        return;
    }
    double lo = 0.0;
    double hi = std::sqrt((lam.array() * v.array().square()).sum());
    for (int it = 0; it < 200; ++it) {
        const double t = 0.5 * (lo + hi);
        const double g =
            (lam.array() * v.array().square() / (t + eta_c * lam.array()).square())
                .sum();
        if (g > 1.0)
            lo = t;
        else
            hi = t;
        if (hi - lo <= 1e-15 * (1.0 + hi)) break;
    }
    const double t = 0.5 * (lo + hi);
    out = v.array() * t / (t + eta_c * lam.array());
}

/// Composed prox of eta*(rho |w| + c |diag(sqrt_lam) w|): inner scaled-norm
/// prox followed by radial shrinkage. The composition is exact for this
/// pair (the scaled norm's subdifferential is invariant under the radial
/// map), so prox-gradient fixed points are true block optima.
inline void prox_block(const Eigen::VectorXd& v, const Eigen::VectorXd& lam,
                       double eta, double rho, double c, Eigen::VectorXd& out) {
    prox_scaled_norm(v, lam, eta * c, out);
    const double nz = out.norm();
    if (nz <= eta * rho)
        out.setZero(out.size());
    else
        out *= (1.0 - eta * rho / nz);
}

struct BlockWork {
    Eigen::VectorXd w;     // current block solution in eigen coordinates
    Eigen::VectorXd fitted; // K beta in sample coordinates
    double rkhs_norm = 0.0;
    double emp_norm_scaled = 0.0; // |diag(sqrt_lam) w| (empirical norm * sqrt(n))
};

/// Block objective in eigen coordinates.
inline double block_objective(const Eigen::VectorXd& rt, const Eigen::VectorXd& lam,
                              const Eigen::VectorXd& sqrt_lam,
                              const Eigen::VectorXd& w, double n, double rho,
                              double c) {
    const double loss = (rt - sqrt_lam.cwiseProduct(w)).squaredNorm() / n;
    return loss + rho * w.norm() + c * sqrt_lam.cwiseProduct(w).norm();
}

/// Accelerated proximal gradient on one block, warm-started, with best
/// iterate tracking so a sweep never increases the objective.
inline void solve_block(const Eigen::VectorXd& rt, const BlockBasis& basis,
                        double n, double rho, double c, int max_iters,
                        double tol, Eigen::VectorXd& w) {
    const Eigen::VectorXd& lam = basis.lam;
    const Eigen::VectorXd& sl = basis.sqrt_lam;
    if (rho <= 0.0 && c <= 0.0) {
        w = rt.cwiseQuotient(sl); // unpenalized block: exact least squares
        return;
    }
    const double lip = 2.0 * basis.lam_max / n;
    const double eta = 1.0 / lip;

    // Fixed point of the prox-gradient map at zero <=> zero is optimal.
    Eigen::VectorXd v0 = eta * (2.0 / n) * sl.cwiseProduct(rt);
    Eigen::VectorXd z0;
    prox_block(v0, lam, eta, rho, c, z0);
    if (z0.isZero(0.0)) {
        w.setZero(rt.size());
        return;
    }

    Eigen::VectorXd y = w, w_prev = w, grad(w.size()), v(w.size()), w_next(w.size());
    double tk = 1.0;
    double best = block_objective(rt, lam, sl, w, n, rho, c);
    Eigen::VectorXd w_best = w;
    const double scale = std::max(1.0, rt.norm() * 2.0 / n * basis.lam_max);

    for (int it = 0; it < max_iters; ++it) {
        grad = (2.0 / n) * (lam.cwiseProduct(y) - sl.cwiseProduct(rt));
        v = y - eta * grad;
        prox_block(v, lam, eta, rho, c, w_next);

        const double step = (w_next - y).norm() / eta;
        const double obj = block_objective(rt, lam, sl, w_next, n, rho, c);
        if (obj < best) {
            best = obj;
            w_best = w_next;
        }
        // adaptive restart keeps the momentum sequence well behaved
        if ((y - w_next).dot(w_next - w_prev) > 0.0) tk = 1.0;
        const double tk1 = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
        y = w_next + ((tk - 1.0) / tk1) * (w_next - w_prev);
        w_prev = w_next;
        tk = tk1;
        if (step <= tol * scale) break;
    }
    w = w_best;
}

} // namespace detail

/// Objective (1/n) sum_i (y_i - f(x_i))^2 + rho |f|_{N,1} + lambda |f|_{I,1}
/// evaluated directly from the function's components; shared by the solver
/// certification tests and the reference oracle.
inline double dp_objective(const SampleBatch& batch, const RegularizationPair& pair,
                           const AdditiveFunction& f) {
    const int n = batch.n();
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double fx = f.evaluate(batch.covariates.row(i).transpose());
        const double r = batch.responses[i] - fx;
        loss += r * r;
    }
    return loss / n + pair.rho * f.rkhs_group_norm() +
           pair.lambda * f.empirical_group_norm(batch);
}

/// Doubly penalized estimator: block coordinate descent over dimensions,
/// with each block solved in the eigenbasis of its jittered Gram. Anchors
/// for component j are the j-th coordinates of the batch covariates.
/// Returns the fitted additive function and a report whose objective
/// trajectory is nonincreasing; converged=false flags a max_sweeps exit.
inline std::pair<AdditiveFunction, FitReport> fit_doubly_penalized(
    const SampleBatch& batch, const RegularizationPair& pair,
    const KernelSpec& kernel, const FitOptions& opts = FitOptions{}) {
    batch.validate();
    kernel.validate();
    if (pair.rho < 0.0 || pair.lambda < 0.0)
        throw InputError("fit_doubly_penalized: penalties must be nonnegative");

    const int n = batch.n();
    const int d = batch.dim();
    const double jitter = opts.jitter >= 0.0 ? opts.jitter : kernel.default_jitter();
    const double c = pair.lambda / std::sqrt(static_cast<double>(n));

    std::vector<detail::BlockBasis> basis(d);
    for (int j = 0; j < d; ++j) {
        std::vector<double> pts(n);
        for (int i = 0; i < n; ++i) pts[i] = batch.covariates(i, j);
        basis[j].factor(gram(kernel, pts, jitter).entries);
    }

    std::vector<detail::BlockWork> blocks(d);
    for (int j = 0; j < d; ++j) {
        blocks[j].w = Eigen::VectorXd::Zero(n);
        blocks[j].fitted = Eigen::VectorXd::Zero(n);
    }

    Eigen::VectorXd residual = batch.responses;
    Eigen::VectorXd rt(n);

    auto total_objective = [&]() {
        double obj = residual.squaredNorm() / n;
        for (int j = 0; j < d; ++j)
            obj += pair.rho * blocks[j].rkhs_norm +
                   c * blocks[j].emp_norm_scaled;
        return obj;
    };

    FitReport report;
    double prev_obj = total_objective();
    bool converged = false;
    int sweep = 0;
    for (; sweep < opts.max_sweeps; ++sweep) {
        for (int j = 0; j < d; ++j) {
            Eigen::VectorXd partial = residual + blocks[j].fitted;
            rt.noalias() = basis[j].Q.transpose() * partial;
            detail::solve_block(rt, basis[j], n, pair.rho, c,
                                opts.inner_max_iters, opts.inner_tol,
                                blocks[j].w);
            blocks[j].fitted.noalias() =
                basis[j].Q * basis[j].sqrt_lam.cwiseProduct(blocks[j].w);
            blocks[j].rkhs_norm = blocks[j].w.norm();
            blocks[j].emp_norm_scaled =
                basis[j].sqrt_lam.cwiseProduct(blocks[j].w).norm();
            residual = partial - blocks[j].fitted;
        }
        // refresh the residual once per sweep to cap incremental drift
        residual = batch.responses;
        for (int j = 0; j < d; ++j) residual -= blocks[j].fitted;

        const double obj = total_objective();
        report.objective_trajectory.push_back(obj);
        if (std::abs(prev_obj - obj) <= opts.tol * std::max(1.0, std::abs(prev_obj))) {
            converged = true;
            ++sweep;
            break;
        }
        prev_obj = obj;
    }
    report.sweeps = sweep;
    report.converged = converged;

    // blockwise stationarity gap: distance of the prox-gradient step from
    // the current point, in units of the step size
    report.block_kkt_residual.assign(d, 0.0);
    for (int j = 0; j < d; ++j) {
        const double eta = n / (2.0 * basis[j].lam_max);
        Eigen::VectorXd partial = residual + blocks[j].fitted;
        rt.noalias() = basis[j].Q.transpose() * partial;
        Eigen::VectorXd grad =
            (2.0 / n) * (basis[j].lam.cwiseProduct(blocks[j].w) -
                         basis[j].sqrt_lam.cwiseProduct(rt));
        Eigen::VectorXd v = blocks[j].w - eta * grad;
        Eigen::VectorXd z;
        detail::prox_block(v, basis[j].lam, eta, pair.rho, c, z);
        report.block_kkt_residual[j] = (z - blocks[j].w).norm() / eta;
    }

    AdditiveFunction f(d, kernel);
    for (int j = 0; j < d; ++j) {
        if (blocks[j].w.isZero(0.0)) continue;
        Component comp;
        comp.anchors.resize(n);
        comp.coeffs.resize(n);
        Eigen::VectorXd beta =
            basis[j].Q * (blocks[j].w.array() / basis[j].sqrt_lam.array()).matrix();
        for (int i = 0; i < n; ++i) {
            comp.anchors[i] = batch.covariates(i, j);
            comp.coeffs[i] = beta[i];
        }
        f.set_component(j, std::move(comp));
    }
    report.active_set = f.pruned_support(opts.prune_threshold);
    return {std::move(f), std::move(report)};
}

/// Independent validation oracle for the same convex program: plain
/// subgradient descent on the stacked coefficient vector with diminishing
/// steps, returning the best-objective iterate. Intended for small
/// instances (n <= 50, d <= 8) only.
inline AdditiveFunction fit_reference(const SampleBatch& batch,
                                      const RegularizationPair& pair,
                                      const KernelSpec& kernel, int iters) {
    batch.validate();
    kernel.validate();
    const int n = batch.n();
    const int d = batch.dim();
    const double c = pair.lambda / std::sqrt(static_cast<double>(n));
    const double jitter = kernel.default_jitter();

    std::vector<Eigen::MatrixXd> K(d);
    for (int j = 0; j < d; ++j) {
        std::vector<double> pts(n);
        for (int i = 0; i < n; ++i) pts[i] = batch.covariates(i, j);
        K[j] = gram(kernel, pts, jitter).entries;
    }

    std::vector<Eigen::VectorXd> beta(d, Eigen::VectorXd::Zero(n));
    std::vector<Eigen::VectorXd> fitted(d, Eigen::VectorXd::Zero(n));
    std::vector<Eigen::VectorXd> best = beta;

    auto objective = [&](const std::vector<Eigen::VectorXd>& b) {
        Eigen::VectorXd r = batch.responses;
        double pen = 0.0;
        for (int j = 0; j < d; ++j) {
            Eigen::VectorXd g = K[j] * b[j];
            r -= g;
            pen += pair.rho * std::sqrt(std::max(b[j].dot(g), 0.0));
            pen += c * g.norm();
        }
        return r.squaredNorm() / n + pen;
    };

    double best_obj = objective(beta);
    std::vector<Eigen::VectorXd> sub(d, Eigen::VectorXd::Zero(n));
    for (int t = 1; t <= iters; ++t) {
        Eigen::VectorXd r = batch.responses;
        for (int j = 0; j < d; ++j) {
            fitted[j].noalias() = K[j] * beta[j];
            r -= fitted[j];
        }
        double sub_sq = 0.0;
        for (int j = 0; j < d; ++j) {
            sub[j].noalias() = -(2.0 / n) * (K[j] * r);
            const double rk = std::sqrt(std::max(beta[j].dot(fitted[j]), 0.0));
            if (rk > 0.0) sub[j] += (pair.rho / rk) * fitted[j];
            const double en = fitted[j].norm();
            if (en > 0.0) sub[j] += (c / en) * (K[j] * fitted[j]);
            sub_sq += sub[j].squaredNorm();
        }
        const double sub_norm = std::sqrt(sub_sq);
        if (sub_norm == 0.0) break;
        const double step = 0.5 / (sub_norm * std::sqrt(static_cast<double>(t)));
        for (int j = 0; j < d; ++j) beta[j] -= step * sub[j];
        const double obj = objective(beta);
        if (obj < best_obj) {
            best_obj = obj;
            best = beta;
        }
    }

    AdditiveFunction f(d, kernel);
    for (int j = 0; j < d; ++j) {
        if (best[j].isZero(0.0)) continue;
        Component comp;
        comp.anchors.resize(n);
        comp.coeffs.resize(n);
        for (int i = 0; i < n; ++i) {
            comp.anchors[i] = batch.covariates(i, j);
            comp.coeffs[i] = best[j][i];
        }
        f.set_component(j, std::move(comp));
    }
    return f;
}

} // namespace sparkle
