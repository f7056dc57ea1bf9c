#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "roughflow/error.hpp"
#include "roughflow/tensor/rough_path.hpp"

namespace roughflow {

struct VariationReport {
    double p = 1.0;                     ///< exponent actually used
    double value = 0.0;                 ///< (sup sum |increment|^p)^{1/p}
    std::vector<std::size_t> witness;   ///< grid indices of an optimal partition
    bool exact = true;
    double lower = 0.0;                 ///< equal to value when exact
    double upper = 0.0;
};

struct Window {
    std::size_t first = 0;
    std::size_t last = 0;
    std::size_t cells() const { return last - first; }
};

enum class Level { first, second };

struct VariationOptions {
    double tie_tol = 1e-12;              ///< relative tolerance when selecting the witness
    std::size_t exact_limit = 20000;     ///< above this many cells level-1 switches to bounds
    bool want_witness = true;
};

inline Window full_window(const CadlagRoughPath& x) { return Window{0, x.cells()}; }

inline Window window_between(const CadlagRoughPath& x, double u, double v) {
    require(u <= v, ErrorKind::invalid_argument, "window start exceeds window end");
    return Window{x.grid_index(u), x.grid_index(v)};
}

inline void check_window(const CadlagRoughPath& x, const Window& w) {
    require(w.first <= w.last && w.last <= x.cells(), ErrorKind::off_grid,
            "window [" + std::to_string(w.first) + "," + std::to_string(w.last) +
                "] is not inside the grid of " + std::to_string(x.cells()) + " cells");
}

namespace detail {

/**
 * Computes s^e for s >= 0. Exponents that are multiples of 1/8 (the common
 * p = 2.5, p/2 = 1.25, p/4 = 0.625 cases) use products of square roots, which
 * is several times faster than std::pow in the O(n^2) loops.
 */
class PowerOf {
  public:
    explicit PowerOf(double e) : e_(e) {
        const double scaled = e * 8.0;
        if (e >= 0.0 && e <= 16.0 && scaled == std::floor(scaled)) {
            fast_ = true;
            const int k = static_cast<int>(scaled);
            whole_ = k / 8;
            half_ = (k >> 2) & 1;
            quarter_ = (k >> 1) & 1;
            eighth_ = k & 1;
        }
    }

    double operator()(double s) const {
        if (!fast_) return std::pow(s, e_);
        double r = 1.0;
        for (int i = 0; i < whole_; ++i) r *= s;
        if (half_ | quarter_ | eighth_) {
            const double r2 = std::sqrt(s);
            if (half_) r *= r2;
            if (quarter_ | eighth_) {
                const double r4 = std::sqrt(r2);
                if (quarter_) r *= r4;
                if (eighth_) r *= std::sqrt(r4);
            }
        }
        return r;
    }

  private:
    double e_;
    bool fast_ = false;
    int whole_ = 0, half_ = 0, quarter_ = 0, eighth_ = 0;
};

inline double root(double s, double p) { return s <= 0.0 ? 0.0 : std::pow(s, 1.0 / p); }

}  // namespace detail

/**
 * @brief Exact p-variation over partitions of grid points first..last.
 *
 * @param sq  sq(i,j) returns the squared norm of the increment between grid indices i<j
 *
 * Backward DP B[i] = max_{j>i} |x(i,j)|^p + B[j]; the witness is the
 * lexicographically smallest optimal index set (smallest next point first).
 */
template <class SqNorm>
VariationReport variation_dp(std::size_t first, std::size_t last, SqNorm&& sq, double p,
                             const VariationOptions& opt = {}) {
    require(p >= 1.0, ErrorKind::invalid_argument, "p-variation requires p >= 1, got " + std::to_string(p));
    VariationReport rep;
    rep.p = p;
    if (last <= first) {
        rep.witness = {first};
        return rep;
    }
    const detail::PowerOf pw(p / 2.0);
    const std::size_t n = last - first;
    std::vector<double> B(n + 1, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        const std::size_t i = first + ii;
        double best = -1.0;
        for (std::size_t jj = ii + 1; jj <= n; ++jj) {
            const double v = pw(sq(i, first + jj)) + B[jj];
            if (v > best) best = v;
        }
        B[ii] = best;
    }
    rep.value = detail::root(B[0], p);
    rep.lower = rep.upper = rep.value;
    if (opt.want_witness) {
        std::size_t ii = 0;
        rep.witness.push_back(first);
        while (ii < n) {
            const double target = B[ii] - opt.tie_tol * std::max(1.0, B[ii]);
            std::size_t pick = n;
            for (std::size_t jj = ii + 1; jj <= n; ++jj) {
                if (pw(sq(first + ii, first + jj)) + B[jj] >= target) {
                    pick = jj;
                    break;
                }
            }
            ii = pick;
            rep.witness.push_back(first + ii);
        }
    }
    return rep;
}

/// p-variation restricted to partitions drawn from `points` (sorted grid indices); a lower bound
template <class SqNorm>
double variation_on_points_pow(const std::vector<std::size_t>& points, SqNorm&& sq, double p) {
    if (points.size() < 2) return 0.0;
    auto sub = [&](std::size_t i, std::size_t j) { return sq(points[i], points[j]); };
    VariationOptions o;
    o.want_witness = false;
    const double v = variation_dp(0, points.size() - 1, sub, p, o).value;
    return std::pow(v, p);
}

/**
 * @brief Exhaustive enumeration over all 2^(n-1) partitions (n <= 14 cells).
 *
 * Test oracle for variation_dp; enumerates index sets in lexicographic order.
 */
template <class SqNorm>
VariationReport variation_bruteforce(std::size_t first, std::size_t last, SqNorm&& sq, double p,
                                     double tie_tol = 1e-12) {
    require(p >= 1.0, ErrorKind::invalid_argument, "p-variation requires p >= 1");
    require(last >= first, ErrorKind::off_grid, "empty or reversed window");
    require(last - first <= 14, ErrorKind::too_large,
            "brute-force enumeration supports at most 14 cells, got " + std::to_string(last - first));
    VariationReport rep;
    rep.p = p;
    if (last == first) {
        rep.witness = {first};
        return rep;
    }
    std::vector<std::size_t> stack{first};
    double best = -1.0;
    auto visit = [&](auto&& self, std::size_t i, double acc, auto&& on_leaf) -> void {
        if (i == last) {
            on_leaf(acc);
            return;
        }
        for (std::size_t j = i + 1; j <= last; ++j) {
            stack.push_back(j);
            self(self, j, acc + std::pow(std::sqrt(sq(i, j)), p), on_leaf);
            stack.pop_back();
        }
    };
    visit(visit, first, 0.0, [&](double acc) { best = std::max(best, acc); });
    bool found = false;
    const double target = best - tie_tol * std::max(1.0, best);
    visit(visit, first, 0.0, [&](double acc) {
        if (!found && acc >= target) {
            found = true;
            rep.witness = stack;
        }
    });
    rep.value = detail::root(best, p);
    rep.lower = rep.upper = rep.value;
    return rep;
}

/**
 * @brief Bracket for the p-variation of an additive (level-1) path with many cells.
 *
 * Upper bound: split into ~sqrt(n) blocks; any interval crossing a block boundary
 * splits into head, coarse middle and tail, so
 *   V^p <= 3^{p-1} (sum_blocks V_block^p + V_coarse^p),
 * applied recursively until blocks fit the exact DP. Lower bound: exact DP
 * restricted to the caller's candidate points.
 */
inline double additive_variation_upper_pow(std::size_t first, std::size_t last,
                                           const std::function<double(std::size_t, std::size_t)>& sq,
                                           double p, std::size_t exact_limit) {
    const std::size_t n = last - first;
    if (n <= exact_limit) {
        VariationOptions o;
        o.want_witness = false;
        return std::pow(variation_dp(first, last, sq, p, o).value, p);
    }
    const std::size_t blocks = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    const std::size_t size = (n + blocks - 1) / blocks;
    std::vector<std::size_t> bounds;
    for (std::size_t b = first; b < last; b += size) bounds.push_back(b);
    bounds.push_back(last);
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < bounds.size(); ++k)
        sum += additive_variation_upper_pow(bounds[k], bounds[k + 1], sq, p, exact_limit);
    std::function<double(std::size_t, std::size_t)> coarse = [&](std::size_t i, std::size_t j) {
        return sq(bounds[i], bounds[j]);
    };
    sum += additive_variation_upper_pow(0, bounds.size() - 1, coarse, p, exact_limit);
    return std::pow(3.0, p - 1.0) * sum;
}

namespace detail {

struct Level1Sq {
    const CadlagRoughPath* x;
    double operator()(std::size_t i, std::size_t j) const {
        const std::size_t d = x->dim();
        const double* a = x->prefix_level1(i);
        const double* b = x->prefix_level1(j);
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double v = b[k] - a[k];
            s += v * v;
        }
        return s;
    }
};

struct Level2Sq {
    const CadlagRoughPath* x;
    double operator()(std::size_t i, std::size_t j) const {
        const std::size_t d = x->dim();
        const double* ai = x->prefix_level1(i);
        const double* aj = x->prefix_level1(j);
        const double* mi = x->prefix_level2(i);
        const double* mj = x->prefix_level2(j);
        double s = 0.0;
        for (std::size_t p = 0; p < d; ++p) {
            const double ap = ai[p];
            for (std::size_t q = 0; q < d; ++q) {
                const double v = mj[p * d + q] - mi[p * d + q] - ap * (aj[q] - ai[q]);
                s += v * v;
            }
        }
        return s;
    }
};

struct Level1DiffSq {
    const CadlagRoughPath* x;
    const CadlagRoughPath* y;
    double operator()(std::size_t i, std::size_t j) const {
        const std::size_t d = x->dim();
        const double* a = x->prefix_level1(i);
        const double* b = x->prefix_level1(j);
        const double* c = y->prefix_level1(i);
        const double* e = y->prefix_level1(j);
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double v = (b[k] - a[k]) - (e[k] - c[k]);
            s += v * v;
        }
        return s;
    }
};

struct Level2DiffSq {
    const CadlagRoughPath* x;
    const CadlagRoughPath* y;
    double operator()(std::size_t i, std::size_t j) const {
        const std::size_t d = x->dim();
        const double* ai = x->prefix_level1(i);
        const double* aj = x->prefix_level1(j);
        const double* mi = x->prefix_level2(i);
        const double* mj = x->prefix_level2(j);
        const double* bi = y->prefix_level1(i);
        const double* bj = y->prefix_level1(j);
        const double* ni = y->prefix_level2(i);
        const double* nj = y->prefix_level2(j);
        double s = 0.0;
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = 0; q < d; ++q) {
                const double u = mj[p * d + q] - mi[p * d + q] - ai[p] * (aj[q] - ai[q]);
                const double w = nj[p * d + q] - ni[p * d + q] - bi[p] * (bj[q] - bi[q]);
                const double v = u - w;
                s += v * v;
            }
        }
        return s;
    }
};

/// block boundaries plus per-block coordinate extremes of the running level-1 value
inline std::vector<std::size_t> level1_candidates(const CadlagRoughPath& x, const Window& w,
                                                  std::size_t budget) {
    const std::size_t d = x.dim();
    const std::size_t n = w.cells();
    const std::size_t per_block = 2 * d + 1;
    const std::size_t blocks = std::max<std::size_t>(1, budget / per_block);
    const std::size_t size = (n + blocks - 1) / blocks;
    std::vector<std::size_t> pts;
    for (std::size_t b = w.first; b < w.last; b += size) {
        const std::size_t e = std::min(w.last, b + size);
        pts.push_back(b);
        for (std::size_t k = 0; k < d; ++k) {
            std::size_t lo = b, hi = b;
            for (std::size_t i = b; i <= e; ++i) {
                if (x.prefix_level1(i)[k] < x.prefix_level1(lo)[k]) lo = i;
                if (x.prefix_level1(i)[k] > x.prefix_level1(hi)[k]) hi = i;
            }
            pts.push_back(lo);
            pts.push_back(hi);
        }
    }
    pts.push_back(w.last);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

}  // namespace detail

/**
 * @brief p-variation of one level of a rough path over a window.
 *
 * Level::second uses the Chen-rebased second level and exponent p/2 (so p >= 2).
 * For Level::first windows beyond opt.exact_limit cells the report is not exact:
 * `value` is the restricted-partition lower bound and [lower, upper] brackets the
 * true value. Level::second is always computed exactly.
 */
inline VariationReport p_variation(const CadlagRoughPath& x, Level level, double p, const Window& w,
                                   const VariationOptions& opt = {}) {
    check_window(x, w);
    if (level == Level::first) {
        require(p >= 1.0, ErrorKind::invalid_argument, "p-variation requires p >= 1");
        detail::Level1Sq sq{&x};
        if (w.cells() <= opt.exact_limit) return variation_dp(w.first, w.last, sq, p, opt);
        auto pts = detail::level1_candidates(x, w, opt.exact_limit);
        auto sub = [&](std::size_t i, std::size_t j) { return sq(pts[i], pts[j]); };
        VariationReport rep = variation_dp(0, pts.size() - 1, sub, p, opt);
        for (auto& i : rep.witness) i = pts[i];
        rep.exact = false;
        rep.lower = rep.value;
        rep.upper = detail::root(additive_variation_upper_pow(w.first, w.last, sq, p, opt.exact_limit), p);
        return rep;
    }
    require(p >= 2.0, ErrorKind::invalid_argument,
            "second-level variation uses exponent p/2 >= 1, so p must be >= 2");
    return variation_dp(w.first, w.last, detail::Level2Sq{&x}, p / 2.0, opt);
}

inline VariationReport p_variation(const CadlagRoughPath& x, Level level, double p,
                                   const VariationOptions& opt = {}) {
    return p_variation(x, level, p, full_window(x), opt);
}

/// p-variation of a scalar path given by its values at grid points
inline VariationReport p_variation(std::span<const double> values, double p, const VariationOptions& opt = {}) {
    require(!values.empty(), ErrorKind::invalid_argument, "scalar path needs at least one value");
    auto sq = [&](std::size_t i, std::size_t j) {
        const double v = values[j] - values[i];
        return v * v;
    };
    return variation_dp(0, values.size() - 1, sq, p, opt);
}

inline VariationReport p_variation_bruteforce(const CadlagRoughPath& x, Level level, double p, const Window& w) {
    check_window(x, w);
    if (level == Level::first) return variation_bruteforce(w.first, w.last, detail::Level1Sq{&x}, p);
    require(p >= 2.0, ErrorKind::invalid_argument, "second-level variation needs p >= 2");
    return variation_bruteforce(w.first, w.last, detail::Level2Sq{&x}, p / 2.0);
}

inline VariationReport p_variation_bruteforce(std::span<const double> values, double p) {
    require(!values.empty(), ErrorKind::invalid_argument, "scalar path needs at least one value");
    auto sq = [&](std::size_t i, std::size_t j) {
        const double v = values[j] - values[i];
        return v * v;
    };
    return variation_bruteforce(0, values.size() - 1, sq, p);
}

namespace detail {
inline void check_rough_p(double p) {
    require(p > 2.0 && p < 3.0, ErrorKind::invalid_argument,
            "rough-path metrics need p in (2,3), got " + std::to_string(p));
}
inline void check_exact_size(const Window& w, const VariationOptions& opt) {
    require(w.cells() <= opt.exact_limit, ErrorKind::too_large,
            "window has " + std::to_string(w.cells()) +
                " cells; coarsen with restrict_to before computing rough-path metrics");
}
}  // namespace detail

struct DistanceParts {
    double level1 = 0.0;  ///< ||U - U~||_p
    double level2 = 0.0;  ///< ||UU - UU~||_{p/2}
    double total() const { return level1 + level2; }
};

inline DistanceParts rough_distance_parts(const CadlagRoughPath& x, const CadlagRoughPath& y, double p,
                                          const Window& w, const VariationOptions& opt = {}) {
    detail::check_rough_p(p);
    require(same_grid(x, y), ErrorKind::off_grid, "rough_distance needs paths on a common grid");
    check_window(x, w);
    detail::check_exact_size(w, opt);
    VariationOptions o = opt;
    o.want_witness = false;
    return {variation_dp(w.first, w.last, detail::Level1DiffSq{&x, &y}, p, o).value,
            variation_dp(w.first, w.last, detail::Level2DiffSq{&x, &y}, p / 2.0, o).value};
}

/// inhomogeneous distance ||U - U~||_p + ||UU - UU~||_{p/2} on a common grid
inline double rough_distance(const CadlagRoughPath& x, const CadlagRoughPath& y, double p, const Window& w,
                             const VariationOptions& opt = {}) {
    return rough_distance_parts(x, y, p, w, opt).total();
}

inline double rough_distance(const CadlagRoughPath& x, const CadlagRoughPath& y, double p) {
    return rough_distance(x, y, p, full_window(x));
}

/// level-1 part of rough_distance only
inline double level1_distance(const CadlagRoughPath& x, const CadlagRoughPath& y, double p, const Window& w,
                              const VariationOptions& opt = {}) {
    require(p >= 1.0, ErrorKind::invalid_argument, "p must be >= 1");
    require(same_grid(x, y), ErrorKind::off_grid, "level1_distance needs paths on a common grid");
    check_window(x, w);
    detail::check_exact_size(w, opt);
    VariationOptions o = opt;
    o.want_witness = false;
    return variation_dp(w.first, w.last, detail::Level1DiffSq{&x, &y}, p, o).value;
}

/// ||U||_p + ||UU||_{p/2}^{1/2}
inline double homogeneous_norm(const CadlagRoughPath& x, double p, const Window& w,
                               const VariationOptions& opt = {}) {
    detail::check_rough_p(p);
    check_window(x, w);
    detail::check_exact_size(w, opt);
    VariationOptions o = opt;
    o.want_witness = false;
    const double n1 = variation_dp(w.first, w.last, detail::Level1Sq{&x}, p, o).value;
    const double n2 = variation_dp(w.first, w.last, detail::Level2Sq{&x}, p / 2.0, o).value;
    return n1 + std::sqrt(n2);
}

inline double homogeneous_norm(const CadlagRoughPath& x, double p) {
    return homogeneous_norm(x, p, full_window(x));
}

}  // namespace roughflow
