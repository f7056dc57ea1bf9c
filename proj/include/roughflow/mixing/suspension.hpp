#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "roughflow/error.hpp"
#include "roughflow/mixing/markov.hpp"
#include "roughflow/rng.hpp"
#include "roughflow/tensor/rough_path.hpp"

namespace roughflow {

enum class FiberMode { constant, polynomial };

namespace detail {

using Poly = std::vector<double>;  // coefficients in increasing degree

inline double poly_eval(const Poly& c, double x) {
    double r = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) r = r * x + c[k];
    return r;
}

inline Poly poly_integral(const Poly& c) {
    Poly out(c.size() + 1, 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) out[k + 1] = c[k] / static_cast<double>(k + 1);
    return out;
}

inline Poly poly_mul(const Poly& a, const Poly& b) {
    if (a.empty() || b.empty()) return {};
    Poly out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

}  // namespace detail

/**
 * @brief Suspension flow over a Markov chain with roof tau and fiber observables.
 *
 * On the fiber of state s the fast observable is xi(u) = q_s(u), a polynomial in
 * the fiber height u in [0, tau_s). Constant mode uses q_s = g(s) (uncentered
 * rows of the base observable). The constant terms are shifted by E eta / tau_bar
 * so that eta = int_0^tau xi has mean zero under pi.
 */
class SuspensionSpec {
  public:
    using FiberPolys = std::vector<std::vector<std::vector<double>>>;  // [state][coord] -> coefficients

    SuspensionSpec() = default;

    SuspensionSpec(MarkovMixingSpec base, std::vector<double> tau, FiberMode mode, FiberPolys polys = {},
                   double roof_bound = 0.0)
        : base_(std::move(base)), tau_(std::move(tau)), mode_(mode) {
        const std::size_t S = base_.states();
        const std::size_t d = base_.dim();
        require(tau_.size() == S, ErrorKind::dimension_mismatch,
                "tau must have one entry per state (" + std::to_string(S) + ")");
        double tmin = INFINITY, tmax = 0.0;
        for (double t : tau_) {
            require(std::isfinite(t) && t > 0.0, ErrorKind::invalid_argument, "roof values must be positive");
            tmin = std::min(tmin, t);
            tmax = std::max(tmax, t);
        }
        roof_bound_ = roof_bound > 0.0 ? roof_bound : std::max(tmax, 1.0 / tmin);
        require(tmin >= 1.0 / roof_bound_ - 1e-12 && tmax <= roof_bound_ + 1e-12, ErrorKind::invalid_argument,
                "roof values must lie in [1/L, L]");
        if (mode_ == FiberMode::constant) {
            require(polys.empty(), ErrorKind::invalid_argument, "constant fiber mode takes no polynomials");
            poly_.assign(S, std::vector<detail::Poly>(d));
            for (std::size_t s = 0; s < S; ++s)
                for (std::size_t i = 0; i < d; ++i)
                    poly_[s][i] = {base_.raw_g()(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i))};
        } else {
            require(polys.size() == S, ErrorKind::dimension_mismatch, "fiber_poly needs one entry per state");
            for (std::size_t s = 0; s < S; ++s) {
                require(polys[s].size() == d, ErrorKind::dimension_mismatch,
                        "fiber_poly[" + std::to_string(s) + "] needs one polynomial per coordinate");
                for (const auto& c : polys[s]) {
                    require(!c.empty(), ErrorKind::invalid_argument, "empty fiber polynomial");
                    for (double v : c) require(std::isfinite(v), ErrorKind::invalid_argument, "non-finite coefficient");
                }
            }
            poly_ = std::move(polys);
        }
        tau_bar_ = 0.0;
        for (std::size_t s = 0; s < S; ++s) tau_bar_ += base_.pi()(static_cast<Eigen::Index>(s)) * tau_[s];
        build(false);
        // shift so that E eta = 0
        for (std::size_t i = 0; i < d; ++i) {
            double mean = 0.0;
            for (std::size_t s = 0; s < S; ++s) mean += base_.pi()(static_cast<Eigen::Index>(s)) * eta_(s, i);
            shift_(static_cast<Eigen::Index>(i)) = mean / tau_bar_;
            for (std::size_t s = 0; s < S; ++s) poly_[s][i][0] -= shift_(static_cast<Eigen::Index>(i));
        }
        build(true);
    }

    const MarkovMixingSpec& base() const { return base_; }
    const std::vector<double>& tau() const { return tau_; }
    FiberMode mode() const { return mode_; }
    std::size_t states() const { return base_.states(); }
    std::size_t dim() const { return base_.dim(); }
    double tau_bar() const { return tau_bar_; }
    double roof_bound() const { return roof_bound_; }
    /// amount subtracted from each fiber observable to center eta
    const Eigen::VectorXd& centering_shift() const { return shift_; }
    /// centered fiber polynomial of state s, coordinate i
    const std::vector<double>& fiber_poly(std::size_t s, std::size_t i) const { return poly_[s][i]; }

    /// eta(s) = int_0^{tau_s} xi, rows indexed by state
    const Eigen::MatrixXd& eta() const { return eta_; }
    /// F_ij(s) = int_0^{tau_s} xi_j(u) int_0^u xi_i, flattened d*d row-major per state
    const Eigen::MatrixXd& fiber_area() const { return area_; }

    Eigen::MatrixXd mean_fiber_area() const { return unflatten(base_.pi().transpose() * area_); }

    Eigen::MatrixXd mean_eta_eta() const { return eta_.transpose() * base_.pi().asDiagonal() * eta_; }

    /// chain carrying the observable eta, whose covariances give sigma^eta and Gamma^eta
    MarkovMixingSpec eta_chain() const { return MarkovMixingSpec(base_.P(), eta_, Centering::subtract_mean); }

    double xi(std::size_t s, std::size_t i, double u) const { return detail::poly_eval(poly_[s][i], u); }

    /// increment int_a^b xi on the fiber of state s
    void segment(std::size_t s, double a, double b, double* inc, double* area) const {
        const std::size_t d = dim();
        for (std::size_t i = 0; i < d; ++i) {
            const auto& I = integral_[s][i];
            inc[i] = detail::poly_eval(I, b) - detail::poly_eval(I, a);
        }
        for (std::size_t i = 0; i < d; ++i) {
            const double Ia = detail::poly_eval(integral_[s][i], a);
            for (std::size_t j = 0; j < d; ++j) {
                const auto& Q = cross_[s][i * d + j];
                area[i * d + j] = detail::poly_eval(Q, b) - detail::poly_eval(Q, a) - Ia * inc[j];
            }
        }
    }

  private:
    Eigen::MatrixXd unflatten(const Eigen::RowVectorXd& v) const {
        const auto d = static_cast<Eigen::Index>(dim());
        Eigen::MatrixXd m(d, d);
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j) m(i, j) = v(i * d + j);
        return m;
    }

    void build(bool centered) {
        const std::size_t S = states(), d = dim();
        integral_.assign(S, std::vector<detail::Poly>(d));
        cross_.assign(S, std::vector<detail::Poly>(d * d));
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t i = 0; i < d; ++i) integral_[s][i] = detail::poly_integral(poly_[s][i]);
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j)
                    cross_[s][i * d + j] = detail::poly_integral(detail::poly_mul(poly_[s][j], integral_[s][i]));
        }
        eta_.resize(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(d));
        area_.resize(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(d * d));
        std::vector<double> inc(d), ar(d * d);
        for (std::size_t s = 0; s < S; ++s) {
            segment(s, 0.0, tau_[s], inc.data(), ar.data());
            for (std::size_t i = 0; i < d; ++i) eta_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i)) = inc[i];
            for (std::size_t q = 0; q < d * d; ++q)
                area_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(q)) = ar[q];
        }
        if (!centered) shift_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    }

    MarkovMixingSpec base_;
    std::vector<double> tau_;
    FiberMode mode_ = FiberMode::constant;
    double roof_bound_ = 1.0;
    double tau_bar_ = 1.0;
    std::vector<std::vector<detail::Poly>> poly_;
    std::vector<std::vector<detail::Poly>> integral_;
    std::vector<std::vector<detail::Poly>> cross_;
    Eigen::MatrixXd eta_, area_;
    Eigen::VectorXd shift_;
};

/**
 * @brief One trajectory of the suspension flow, rescaled.
 *
 * `path` is the lift of V^eps on V-time [0, T]: one cell per fiber (or fiber
 * piece), V-time = eps^2 * fast time / tau_bar. Breakpoints (V-times) split
 * fibers so that they become grid points.
 */
struct SuspensionRecord {
    CadlagRoughPath path;
    std::vector<std::size_t> states;     ///< state of every visited fiber
    std::vector<double> eta;             ///< full-fiber integrals, row-major (fibers x d)
    std::vector<double> renewal_times;   ///< fast times sum_{j<k} tau, k = 0..fibers
    double epsilon = 1.0;
    double tau_bar = 1.0;

    /// n(s) = max{k : sum_{j<k} tau_j <= s} for fast time s within the sampled range
    std::size_t renewal_count(double s) const {
        require(s >= 0.0 && s < renewal_times.back(), ErrorKind::invalid_argument,
                "renewal_count: time outside the sampled range");
        return static_cast<std::size_t>(std::upper_bound(renewal_times.begin(), renewal_times.end(), s) -
                                        renewal_times.begin()) -
               1;
    }
};

inline SuspensionRecord suspension_sample(const SuspensionSpec& spec, double epsilon, double T, RandomStream& rng,
                                          std::vector<double> breakpoints = {}) {
    require(epsilon > 0.0 && T > 0.0, ErrorKind::invalid_argument, "suspension_sample needs epsilon > 0 and T > 0");
    std::sort(breakpoints.begin(), breakpoints.end());
    for (double b : breakpoints)
        require(b > 0.0 && b < T, ErrorKind::invalid_argument, "breakpoints must lie inside (0, T)");
    const std::size_t d = spec.dim();
    const double e2 = epsilon * epsilon;
    const double tb = spec.tau_bar();
    const double H = T * tb / e2;
    SuspensionRecord rec;
    rec.epsilon = epsilon;
    rec.tau_bar = tb;
    std::vector<double> grid{0.0}, a, m;
    std::vector<double> inc(d), area(d * d);
    rec.renewal_times.push_back(0.0);
    std::size_t s = spec.base().draw_initial(rng);
    double start = 0.0;
    std::size_t next_break = 0;
    for (;;) {
        const double tau = spec.tau()[s];
        const double end = start + tau;
        rec.states.push_back(s);
        for (std::size_t i = 0; i < d; ++i) rec.eta.push_back(spec.eta()(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i)));
        rec.renewal_times.push_back(end);
        const double stop = std::min(end, H);
        double h0 = 0.0;
        auto emit = [&](double h1, double vtime) {
            if (h1 <= h0) return;
            spec.segment(s, h0, h1, inc.data(), area.data());
            for (std::size_t i = 0; i < d; ++i) a.push_back(epsilon * inc[i]);
            for (std::size_t q = 0; q < d * d; ++q) m.push_back(e2 * area[q]);
            grid.push_back(vtime);
            h0 = h1;
        };
        while (next_break < breakpoints.size() && breakpoints[next_break] * tb / e2 < stop) {
            emit(breakpoints[next_break] * tb / e2 - start, breakpoints[next_break]);
            ++next_break;
        }
        if (end >= H) {
            emit(H - start, T);
            break;
        }
        emit(tau, e2 * end / tb);
        start = end;
        s = spec.base().draw_next(s, rng);
    }
    // guard against rounding collisions with the exact breakpoint / end times
    for (std::size_t k = 1; k < grid.size(); ++k)
        require(grid[k] > grid[k - 1], ErrorKind::numerical, "suspension grid collapsed; choose different breakpoints");
    rec.path = CadlagRoughPath(d, std::move(grid), std::move(a), std::move(m));
    return rec;
}

inline SuspensionRecord suspension_sample(const SuspensionSpec& spec, double epsilon, double T, std::uint64_t seed,
                                          std::uint64_t replica = 0, std::vector<double> breakpoints = {}) {
    RandomStream rng(seed, replica, stream_tag::suspension);
    return suspension_sample(spec, epsilon, T, rng, std::move(breakpoints));
}

}  // namespace roughflow
