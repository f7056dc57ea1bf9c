#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "roughflow/error.hpp"
#include "roughflow/rng.hpp"

namespace roughflow {

enum class Centering {
    subtract_mean,  ///< replace g by g - E_pi g
    asserted,       ///< caller asserts E_pi g = 0; verified at construction
    keep            ///< leave g untouched (covariance_summary rejects non-centered g)
};

/**
 * @brief Finite-state stationary Markov chain with a vector observable.
 *
 * xi(n) = g(state_n), with state_0 ~ pi. Rows of g are observables per state.
 */
class MarkovMixingSpec {
  public:
    MarkovMixingSpec() = default;

    MarkovMixingSpec(Eigen::MatrixXd P, Eigen::MatrixXd g, Centering centering = Centering::subtract_mean,
                     double tol = 1e-12)
        : P_(std::move(P)), raw_g_(std::move(g)), tol_(tol) {
        const auto S = P_.rows();
        require(S >= 1 && P_.cols() == S, ErrorKind::dimension_mismatch, "P must be a square S x S matrix");
        require(raw_g_.rows() == S && raw_g_.cols() >= 1, ErrorKind::dimension_mismatch,
                "g must have one row per state and at least one column");
        for (Eigen::Index i = 0; i < S; ++i) {
            for (Eigen::Index j = 0; j < S; ++j)
                require(std::isfinite(P_(i, j)) && P_(i, j) >= 0.0, ErrorKind::not_stochastic,
                        "P(" + std::to_string(i) + "," + std::to_string(j) + ") must be a nonnegative number");
            require(std::abs(P_.row(i).sum() - 1.0) <= tol, ErrorKind::not_stochastic,
                    "row " + std::to_string(i) + " of P sums to " + std::to_string(P_.row(i).sum()));
        }
        require(raw_g_.allFinite(), ErrorKind::invalid_argument, "g has non-finite entries");
        pi_ = stationary_distribution(P_);
        const Eigen::RowVectorXd mean = pi_.transpose() * raw_g_;
        g_ = raw_g_;
        if (centering == Centering::subtract_mean) {
            g_.rowwise() -= mean;
        } else if (centering == Centering::asserted) {
            require(mean.cwiseAbs().maxCoeff() <= tol, ErrorKind::not_centered,
                    "observable asserted centered but E_pi g has magnitude " +
                        std::to_string(mean.cwiseAbs().maxCoeff()));
        }
        centered_ = (pi_.transpose() * g_).cwiseAbs().maxCoeff() <= std::max(tol, 1e-12 * g_.cwiseAbs().maxCoeff());
        cumulative_.resize(static_cast<std::size_t>(S * S));
        for (Eigen::Index i = 0; i < S; ++i) {
            double c = 0.0;
            for (Eigen::Index j = 0; j < S; ++j) {
                c += P_(i, j);
                cumulative_[static_cast<std::size_t>(i * S + j)] = c;
            }
            cumulative_[static_cast<std::size_t>(i * S + S - 1)] = 1.0;
        }
        pi_cumulative_.resize(static_cast<std::size_t>(S));
        double c = 0.0;
        for (Eigen::Index j = 0; j < S; ++j) {
            c += pi_(j);
            pi_cumulative_[static_cast<std::size_t>(j)] = c;
        }
        pi_cumulative_.back() = 1.0;
    }

    std::size_t states() const { return static_cast<std::size_t>(P_.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(g_.cols()); }
    const Eigen::MatrixXd& P() const { return P_; }
    const Eigen::VectorXd& pi() const { return pi_; }
    const Eigen::MatrixXd& g() const { return g_; }
    const Eigen::MatrixXd& raw_g() const { return raw_g_; }
    bool centered() const { return centered_; }
    double tol() const { return tol_; }

    std::size_t draw_initial(RandomStream& rng) const { return draw(pi_cumulative_.data(), rng.uniform()); }

    std::size_t draw_next(std::size_t state, RandomStream& rng) const {
        return draw(cumulative_.data() + state * states(), rng.uniform());
    }

    /// solves pi (I - P) = 0 with sum(pi) = 1 by least squares (unique when irreducible)
    static Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P) {
        const auto S = P.rows();
        Eigen::MatrixXd A(S + 1, S);
        A.topRows(S) = (Eigen::MatrixXd::Identity(S, S) - P).transpose();
        A.row(S).setOnes();
        Eigen::VectorXd b = Eigen::VectorXd::Zero(S + 1);
        b(S) = 1.0;
        Eigen::VectorXd pi = A.colPivHouseholderQr().solve(b);
        for (Eigen::Index i = 0; i < S; ++i)
            if (pi(i) < 0.0 && pi(i) > -1e-14) pi(i) = 0.0;
        return pi / pi.sum();
    }

  private:
    std::size_t draw(const double* cum, double u) const {
        const std::size_t S = states();
        return static_cast<std::size_t>(std::upper_bound(cum, cum + S - 1, u) - cum);
    }

    Eigen::MatrixXd P_;
    Eigen::MatrixXd raw_g_;
    Eigen::MatrixXd g_;
    Eigen::VectorXd pi_;
    double tol_ = 1e-12;
    bool centered_ = false;
    std::vector<double> cumulative_;
    std::vector<double> pi_cumulative_;
};

struct ChainSample {
    std::vector<std::size_t> states;
    std::vector<double> xi;  ///< row-major n x d
};

/// stationary trajectory of length n from the stream (seed, replica, tag)
inline ChainSample sample_chain(const MarkovMixingSpec& spec, std::size_t n, RandomStream& rng) {
    ChainSample out;
    out.states.resize(n);
    out.xi.resize(n * spec.dim());
    if (n == 0) return out;
    std::size_t s = spec.draw_initial(rng);
    const std::size_t d = spec.dim();
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) s = spec.draw_next(s, rng);
        out.states[k] = s;
        for (std::size_t i = 0; i < d; ++i)
            out.xi[k * d + i] = spec.g()(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i));
    }
    return out;
}

inline std::vector<double> sample_sequence(const MarkovMixingSpec& spec, std::size_t n, std::uint64_t seed,
                                           std::uint64_t replica = 0) {
    RandomStream rng(seed, replica, stream_tag::chain);
    return sample_chain(spec, n, rng).xi;
}

inline Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& P, std::size_t n) {
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(P.rows(), P.cols());
    Eigen::MatrixXd base = P;
    while (n > 0) {
        if (n & 1) result = result * base;
        n >>= 1;
        if (n) base = base * base;
    }
    return result;
}

namespace detail {

/// max_{i: pi_i > 0} TV(Pn(i,.), pi); rounding residue below 1e-14 is flushed to 0
inline double max_tv_to_stationary(const Eigen::MatrixXd& Pn, const Eigen::VectorXd& pi) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < Pn.rows(); ++i) {
        if (pi(i) <= 0.0) continue;
        best = std::max(best, 0.5 * (Pn.row(i).transpose() - pi).cwiseAbs().sum());
    }
    return best < 1e-14 ? 0.0 : std::min(1.0, best);
}

}  // namespace detail

/// phi(n) = max over states i with pi_i > 0 of TV(P^n(i, .), pi)
inline double phi_coefficient(const MarkovMixingSpec& spec, std::size_t n) {
    require(n >= 1, ErrorKind::invalid_argument, "phi_coefficient needs n >= 1");
    return detail::max_tv_to_stationary(matrix_power(spec.P(), n), spec.pi());
}

struct MixingDiagnostics {
    std::vector<double> phi;   ///< phi(1..n_max)
    std::vector<double> rho;   ///< rho(1..n_max)
    double condition_value = 0.0;
    std::size_t argmax = 0;
    bool satisfied = true;     ///< n^3 (phi + rho) not growing at the end of the horizon
};

/**
 * @brief sup_{n <= n_max} n^3 (phi(n) + rho(n)).
 *
 * rho(n) = 0 for n >= 1 because xi(m) depends on the state at time m only.
 * The condition is flagged as violated when n^3 (phi + rho) at n_max exceeds
 * its value at ceil(n_max / 2), i.e. the weighted coefficient is still growing.
 */
inline MixingDiagnostics mixing_condition_check(const MarkovMixingSpec& spec, std::size_t n_max) {
    MixingDiagnostics diag;
    if (n_max == 0) return diag;
    Eigen::MatrixXd Pn = spec.P();
    std::vector<double> weighted(n_max + 1, 0.0);
    for (std::size_t n = 1; n <= n_max; ++n) {
        if (n > 1) Pn = Pn * spec.P();
        double best = detail::max_tv_to_stationary(Pn, spec.pi());
        if (!diag.phi.empty()) best = std::min(best, diag.phi.back());
        diag.phi.push_back(best);
        diag.rho.push_back(0.0);
        const double nn = static_cast<double>(n);
        weighted[n] = nn * nn * nn * best;
        if (weighted[n] > diag.condition_value) {
            diag.condition_value = weighted[n];
            diag.argmax = n;
        }
    }
    const std::size_t half = (n_max + 1) / 2;
    diag.satisfied = n_max < 2 || weighted[n_max] <= weighted[half] * (1.0 + 1e-12);
    return diag;
}

struct CovarianceSummary {
    Eigen::MatrixXd sigma;   ///< long-run covariance
    Eigen::MatrixXd gamma;   ///< sum_{r>=1} E xi(0) (x) xi(r)
    Eigen::MatrixXd var0;    ///< E xi(0) (x) xi(0)
    std::size_t lag_cutoff = 0;
    double tail_bound = 0.0;
};

/// lagged covariance matrix sum_s pi_s g(s) (P^r g)(s)^T for one precomputed P^r
inline Eigen::MatrixXd lagged_covariance(const MarkovMixingSpec& spec, const Eigen::MatrixXd& Pr) {
    return spec.g().transpose() * spec.pi().asDiagonal() * (Pr * spec.g());
}

/// Dobrushin coefficient max_{i,j} TV(P^r(i,.), P^r(j,.))
inline double dobrushin(const Eigen::MatrixXd& Pr) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < Pr.rows(); ++i)
        for (Eigen::Index j = i + 1; j < Pr.rows(); ++j)
            best = std::max(best, 0.5 * (Pr.row(i) - Pr.row(j)).cwiseAbs().sum());
    return best;
}

/**
 * @brief Exact Gamma and sigma from lagged covariances.
 *
 * Gamma = sum_{r>=1} C(r) is truncated at the first lag R where the rigorous tail
 * bound 2 max_i E|g_i| max_j |g_j|_inf R q / (1 - q), q = dobrushin(P^R), drops
 * below tail_tol (the Dobrushin coefficient is submultiplicative).
 */
inline CovarianceSummary covariance_summary(const MarkovMixingSpec& spec, double tail_tol = 1e-12,
                                            std::size_t max_lag = 1000000) {
    require(spec.centered(), ErrorKind::not_centered,
            "observable is not centered (E_pi g != 0); construct the spec with Centering::subtract_mean");
    const Eigen::MatrixXd& g = spec.g();
    const std::size_t d = spec.dim();
    CovarianceSummary out;
    out.var0 = g.transpose() * spec.pi().asDiagonal() * g;
    out.gamma = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    const double mean_abs = (spec.pi().transpose() * g.cwiseAbs()).maxCoeff();
    const double sup = g.cwiseAbs().maxCoeff();
    const double C = 2.0 * mean_abs * sup;
    Eigen::MatrixXd Pr = Eigen::MatrixXd::Identity(spec.P().rows(), spec.P().cols());
    for (std::size_t r = 1; r <= max_lag; ++r) {
        Pr = Pr * spec.P();
        out.gamma += lagged_covariance(spec, Pr);
        const double q = dobrushin(Pr);
        const double bound = q < 1.0 ? C * static_cast<double>(r) * q / (1.0 - q) : INFINITY;
        if (C == 0.0 || bound < tail_tol) {
            out.lag_cutoff = r;
            out.tail_bound = C == 0.0 ? 0.0 : bound;
            out.sigma = out.var0 + out.gamma + out.gamma.transpose();
            return out;
        }
    }
    throw Error(ErrorKind::non_summable,
                "lagged covariances are not summable to tolerance within " + std::to_string(max_lag) +
                    " lags (the chain does not mix)");
}

/**
 * @brief Finite-k Cesaro averages defining sigma and Gamma as double limits.
 *
 * Returns (sigma_k, gamma_k) with sigma_k = k^{-1} sum_{m,n=0}^{k} C(n-m) and
 * gamma_k = k^{-1} sum_{n=0}^{k} sum_{m=-k}^{n-1} C(n-m), where C(-r) = C(r)^T.
 * Both approach covariance_summary at rate O(1/k) under summable mixing.
 */
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> cesaro_covariances(const MarkovMixingSpec& spec, std::size_t k) {
    require(k >= 1, ErrorKind::invalid_argument, "cesaro_covariances needs k >= 1");
    std::vector<Eigen::MatrixXd> C(2 * k + 1);
    Eigen::MatrixXd Pr = Eigen::MatrixXd::Identity(spec.P().rows(), spec.P().cols());
    for (std::size_t r = 0; r <= 2 * k; ++r) {
        if (r > 0) Pr = Pr * spec.P();
        C[r] = lagged_covariance(spec, Pr);
    }
    const auto d = static_cast<Eigen::Index>(spec.dim());
    Eigen::MatrixXd sig = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t m = 0; m <= k; ++m)
        for (std::size_t n = 0; n <= k; ++n) sig += n >= m ? C[n - m] : Eigen::MatrixXd(C[m - n].transpose());
    Eigen::MatrixXd gam = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t n = 0; n <= k; ++n)
        for (std::size_t r = 1; r <= n + k; ++r) gam += C[r];
    const double kk = static_cast<double>(k);
    return {sig / kk, gam / kk};
}

}  // namespace roughflow
