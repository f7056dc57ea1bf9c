#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "roughflow/error.hpp"
#include "roughflow/rng.hpp"

namespace roughflow {

struct Estimate {
    double value = 0.0;
    double se = 0.0;
    /// |value - target| / se, infinite when se == 0 and the value misses the target
    double z(double target) const {
        const double diff = std::abs(value - target);
        if (se > 0.0) return diff / se;
        return diff <= 1e-12 * std::max(1.0, std::abs(target)) ? 0.0 : INFINITY;
    }
};

inline double mean(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

inline Estimate mean_estimate(const std::vector<double>& x) {
    require(x.size() >= 2, ErrorKind::invalid_argument, "need at least two samples");
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    const double n = static_cast<double>(x.size());
    return {m, std::sqrt(ss / (n - 1.0) / n)};
}

/// sample covariance of (x, y) with the delta-method standard error
inline Estimate covariance_estimate(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, ErrorKind::invalid_argument, "covariance needs paired samples");
    const double mx = mean(x), my = mean(y);
    const double n = static_cast<double>(x.size());
    std::vector<double> prod(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) prod[i] = (x[i] - mx) * (y[i] - my);
    const Estimate e = mean_estimate(prod);
    return {e.value * n / (n - 1.0), e.se};
}

/// two-sample comparison: z-score of the difference of two independent estimates
inline double two_sample_z(const Estimate& a, const Estimate& b) {
    const double se = std::sqrt(a.se * a.se + b.se * b.se);
    const double diff = std::abs(a.value - b.value);
    if (se > 0.0) return diff / se;
    return diff == 0.0 ? 0.0 : INFINITY;
}

inline double median(std::vector<double> x) {
    require(!x.empty(), ErrorKind::invalid_argument, "median of empty sample");
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();
    return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

inline double quantile(std::vector<double> x, double q) {
    require(!x.empty(), ErrorKind::invalid_argument, "quantile of empty sample");
    std::sort(x.begin(), x.end());
    const double pos = q * static_cast<double>(x.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

/// two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b| on sorted copies
inline double ks_sorted(const std::vector<double>& a, const std::vector<double>& b) {
    std::size_t i = 0, j = 0;
    double best = 0.0;
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return best;
}

inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    require(!a.empty() && !b.empty(), ErrorKind::invalid_argument, "KS needs non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return ks_sorted(a, b);
}

/**
 * @brief Null quantile of the two-sample KS statistic by pooled bootstrap.
 *
 * Both samples are redrawn with replacement from the pooled sample (the law
 * under the null hypothesis); returns the `level` quantile of the statistic.
 */
inline double ks_bootstrap_threshold(const std::vector<double>& a, const std::vector<double>& b,
                                     std::size_t resamples, double level, RandomStream& rng) {
    std::vector<double> pool(a);
    pool.insert(pool.end(), b.begin(), b.end());
    std::vector<double> stats(resamples), ra(a.size()), rb(b.size());
    const double n = static_cast<double>(pool.size());
    auto pick = [&]() { return pool[std::min(pool.size() - 1, static_cast<std::size_t>(rng.uniform() * n))]; };
    for (std::size_t r = 0; r < resamples; ++r) {
        for (auto& v : ra) v = pick();
        for (auto& v : rb) v = pick();
        std::sort(ra.begin(), ra.end());
        std::sort(rb.begin(), rb.end());
        stats[r] = ks_sorted(ra, rb);
    }
    return quantile(stats, level);
}

struct RateFit {
    std::vector<double> x;  ///< log N
    std::vector<double> y;  ///< log error
    double slope = 0.0;     ///< decay rate delta = -(fitted slope)
    double intercept = 0.0;
    double r2 = 0.0;
};

/// ordinary least squares of log(err) on log(N); `slope` reports the decay rate -b
inline RateFit fit_rate(const std::vector<double>& N, const std::vector<double>& err) {
    require(N.size() == err.size() && N.size() >= 2, ErrorKind::invalid_argument, "rate fit needs >= 2 points");
    RateFit f;
    for (std::size_t i = 0; i < N.size(); ++i) {
        require(N[i] > 0 && err[i] > 0, ErrorKind::invalid_argument, "rate fit needs positive values");
        f.x.push_back(std::log(N[i]));
        f.y.push_back(std::log(err[i]));
    }
    const double mx = mean(f.x), my = mean(f.y);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < f.x.size(); ++i) {
        sxx += (f.x[i] - mx) * (f.x[i] - mx);
        sxy += (f.x[i] - mx) * (f.y[i] - my);
        syy += (f.y[i] - my) * (f.y[i] - my);
    }
    const double b = sxy / sxx;
    f.slope = -b;
    f.intercept = my - b * mx;
    f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

}  // namespace roughflow
