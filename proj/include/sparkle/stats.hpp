#pragma once

#include <cmath>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "sparkle/common.hpp"

namespace sparkle {

struct OlsFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double slope_se = 0.0;
    double p_value = 1.0; // two-sided test of slope == 0
    int n = 0;
};

/// Simple least squares y ~ a + b x with slope inference.
inline OlsFit ols(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw InputError("ols: size mismatch");
    const int n = static_cast<int>(x.size());
    if (n < 3) throw InputError("ols: need at least 3 points");
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0) throw InputError("ols: degenerate predictor");
    OlsFit fit;
    fit.n = n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double e = y[i] - fit.intercept - fit.slope * x[i];
        rss += e * e;
    }
    fit.r_squared = syy > 0.0 ? 1.0 - rss / syy : 1.0;
    if (n > 2) {
        const double sigma2 = rss / (n - 2);
        fit.slope_se = std::sqrt(sigma2 / sxx);
        if (fit.slope_se > 0.0) {
            const double t = std::abs(fit.slope) / fit.slope_se;
            boost::math::students_t dist(n - 2);
            fit.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, t));
        } else {
            fit.p_value = 0.0;
        }
    }
    return fit;
}

/// Upper t quantile for two-sided confidence bands.
inline double t_critical(double confidence, int df) {
    if (df < 1) throw InputError("t_critical: df must be >= 1");
    boost::math::students_t dist(df);
    return boost::math::quantile(dist, 0.5 + confidence / 2.0);
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double sample_stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

} // namespace sparkle
