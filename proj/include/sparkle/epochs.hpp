#pragma once

#include <cmath>
#include <vector>

#include "sparkle/common.hpp"

namespace sparkle {

/// Epoch layout for an epoch-screening policy: lengths tau_q, screening
/// tolerances eps_q, and the constants they were derived from. The last
/// epoch is truncated so the lengths sum to the horizon exactly.
struct EpochSchedule {
    long long horizon = 0;
    std::vector<long long> tau;
    std::vector<double> eps;
    int Q = 0;
    double C1 = 0.0;
    int s0 = 0;
    double m = 0.0;
    int d = 0;

    /// Epoch index (0-based) containing step t (0-based).
    int epoch_of(long long t) const {
        long long cum = 0;
        for (int q = 0; q < Q; ++q) {
            cum += tau[q];
            if (t < cum) return q;
        }
        return Q - 1;
    }
};

/// Epoch lengths tau_q = ceil(C1 (s0^{(2m+1)/(4m)} 2^{q+4})^{(4m+2)/(2m-1)}
/// log10(d T) log10(T)) accumulated until they cover T, with the final
/// epoch truncated; tolerances eps_q = 2^{-q} (log10 T)^{-(2m-1)/(4m)}.
/// Base-10 logs match the tuned constants this schedule is used with; the
/// tolerance halving and the growth ratio are base-independent.
inline EpochSchedule build_epoch_schedule(long long T, int d, int s0, double m,
                                          double C1) {
    if (T < 3)
        throw InputError("build_epoch_schedule: T must be >= 3 so log T is "
                         "bounded away from zero");
    if (d < 1 || s0 < 1) throw InputError("build_epoch_schedule: d, s0 must be >= 1");
    if (!(m > 1.5)) throw InputError("build_epoch_schedule: m must exceed 3/2");
    if (!(C1 > 0.0)) throw InputError("build_epoch_schedule: C1 must be positive");

    EpochSchedule sched;
    sched.horizon = T;
    sched.C1 = C1;
    sched.s0 = s0;
    sched.m = m;
    sched.d = d;

    const double log_dT = std::log10(static_cast<double>(d)) +
                          std::log10(static_cast<double>(T));
    const double log_T = std::log10(static_cast<double>(T));
    const double growth_exp = (4.0 * m + 2.0) / (2.0 * m - 1.0);
    const double sparsity_exp = (2.0 * m + 1.0) / (4.0 * m);
    const double eps_exp = (2.0 * m - 1.0) / (4.0 * m);

    long long cum = 0;
    for (int q = 1; cum < T; ++q) {
        const double base = std::pow(static_cast<double>(s0), sparsity_exp) *
                            std::pow(2.0, q + 4);
        const double raw = C1 * std::pow(base, growth_exp) * log_dT * log_T;
        long long len = static_cast<long long>(std::ceil(raw));
        if (len < 1) len = 1;
        if (cum + len > T) len = T - cum; // truncate the final epoch
        sched.tau.push_back(len);
        sched.eps.push_back(std::pow(2.0, -q) * std::pow(log_T, -eps_exp));
        cum += len;
    }
    sched.Q = static_cast<int>(sched.tau.size());
    return sched;
}

} // namespace sparkle
