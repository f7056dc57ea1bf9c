#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "roughflow/error.hpp"
#include "roughflow/parallel.hpp"
#include "roughflow/rng.hpp"
#include "roughflow/tensor/truncated_tensor.hpp"

namespace roughflow {

/// piecewise-linear H on [0,1]: row k of h is the constant derivative on [k/m, (k+1)/m)
struct CMPath {
    Eigen::MatrixXd h;  ///< m x d

    CMPath() = default;
    explicit CMPath(Eigen::MatrixXd rows) : h(std::move(rows)) {}
    static CMPath straight(const Eigen::VectorXd& a, std::size_t m) {
        Eigen::MatrixXd h(static_cast<Eigen::Index>(m), a.size());
        for (Eigen::Index k = 0; k < h.rows(); ++k) h.row(k) = a.transpose();
        return CMPath(h);
    }

    std::size_t segments() const { return static_cast<std::size_t>(h.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(h.cols()); }

    /// same path with every segment split into `factor` equal pieces
    CMPath refine(std::size_t factor) const {
        require(factor >= 1, ErrorKind::invalid_argument, "refinement factor must be >= 1");
        Eigen::MatrixXd out(h.rows() * static_cast<Eigen::Index>(factor), h.cols());
        for (Eigen::Index k = 0; k < out.rows(); ++k) out.row(k) = h.row(k / static_cast<Eigen::Index>(factor));
        return CMPath(out);
    }

    /// path on [0,1] running `first` on [0,1/2] and `second` on [1/2,1]; both need the same m
    static CMPath concatenate(const CMPath& first, const CMPath& second) {
        require(first.dim() == second.dim() && first.segments() == second.segments(), ErrorKind::dimension_mismatch,
                "concatenate: paths need equal dimension and segment count");
        Eigen::MatrixXd out(first.h.rows() * 2, first.h.cols());
        out.topRows(first.h.rows()) = 2.0 * first.h;
        out.bottomRows(second.h.rows()) = 2.0 * second.h;
        return CMPath(out);
    }
};

/// coefficients <A, e_{i_1..i_l}> of a level-l tensor over R^d, row-major in the word
struct ContractionTensor {
    std::size_t dim = 1;
    std::size_t level = 1;
    std::vector<double> coeffs;

    ContractionTensor() = default;
    ContractionTensor(std::size_t d, std::size_t l, std::vector<double> c) : dim(d), level(l), coeffs(std::move(c)) {
        require(d >= 1 && l >= 1, ErrorKind::invalid_argument, "contraction tensor needs d >= 1 and level >= 1");
        std::size_t n = 1;
        for (std::size_t k = 0; k < l; ++k) n *= d;
        require(coeffs.size() == n, ErrorKind::dimension_mismatch,
                "contraction tensor needs d^l = " + std::to_string(n) + " coefficients");
        for (double v : coeffs) require(std::isfinite(v), ErrorKind::invalid_argument, "non-finite tensor entry");
    }

    /// the single word e_{i_1..i_l}
    static ContractionTensor word(std::size_t d, const std::vector<std::size_t>& w) {
        std::size_t n = 1, idx = 0;
        for (std::size_t k = 0; k < w.size(); ++k) n *= d;
        for (auto i : w) {
            require(i < d, ErrorKind::invalid_argument, "word letter out of range");
            idx = idx * d + i;
        }
        std::vector<double> c(n, 0.0);
        c[idx] = 1.0;
        return ContractionTensor(d, w.size(), c);
    }

    ContractionTensor scaled(double lambda) const {
        ContractionTensor out = *this;
        for (auto& v : out.coeffs) v *= lambda;
        return out;
    }

    double pair(const TruncatedTensor& t) const {
        const auto& lv = t.level(level);
        double s = 0.0;
        for (std::size_t i = 0; i < coeffs.size(); ++i) s += coeffs[i] * lv[i];
        return s;
    }
};

namespace detail {

struct SigmaGeometry {
    Eigen::MatrixXd root;       ///< Sigma^{1/2}
    Eigen::MatrixXd inv_root;   ///< pseudo-inverse of Sigma^{1/2}
    Eigen::MatrixXd null_basis; ///< orthonormal basis of ker Sigma (columns)
};

inline SigmaGeometry sigma_geometry(const Eigen::MatrixXd& sigma, double tol = 1e-12) {
    require(sigma.rows() == sigma.cols() && sigma.rows() >= 1, ErrorKind::dimension_mismatch, "Sigma must be square");
    require(sigma.allFinite(), ErrorKind::invalid_argument, "Sigma has non-finite entries");
    require((sigma - sigma.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, sigma.cwiseAbs().maxCoeff()),
            ErrorKind::invalid_argument, "Sigma must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    const Eigen::VectorXd& lam = es.eigenvalues();
    const double top = std::max(lam.cwiseAbs().maxCoeff(), 0.0);
    require(lam.minCoeff() >= -1e-10 * std::max(1.0, top), ErrorKind::invalid_argument, "Sigma must be PSD");
    const double cut = tol * std::max(1.0, top);
    const auto n = sigma.rows();
    Eigen::VectorXd r(n), ir(n);
    std::vector<Eigen::Index> null_cols;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (lam(i) > cut) {
            r(i) = std::sqrt(lam(i));
            ir(i) = 1.0 / r(i);
        } else {
            r(i) = ir(i) = 0.0;
            null_cols.push_back(i);
        }
    }
    SigmaGeometry g;
    const Eigen::MatrixXd& V = es.eigenvectors();
    g.root = V * r.asDiagonal() * V.transpose();
    g.inv_root = V * ir.asDiagonal() * V.transpose();
    g.null_basis = Eigen::MatrixXd(n, static_cast<Eigen::Index>(null_cols.size()));
    for (std::size_t c = 0; c < null_cols.size(); ++c) g.null_basis.col(static_cast<Eigen::Index>(c)) = V.col(null_cols[c]);
    return g;
}

}  // namespace detail

/**
 * @brief Cameron-Martin norm (sum_k |Sigma^{-1/2} h_k|^2 / m)^{1/2}.
 *
 * +infinity if some h_k leaves range(Sigma).
 */
inline double cm_norm(const CMPath& path, const Eigen::MatrixXd& sigma) {
    require(static_cast<std::size_t>(sigma.rows()) == path.dim(), ErrorKind::dimension_mismatch,
            "Sigma and path dimensions differ");
    const auto g = detail::sigma_geometry(sigma);
    double s = 0.0;
    for (Eigen::Index k = 0; k < path.h.rows(); ++k) {
        const Eigen::VectorXd row = path.h.row(k).transpose();
        if (g.null_basis.cols() > 0) {
            const double off = (g.null_basis.transpose() * row).norm();
            if (off > 1e-12 * std::max(1.0, row.norm())) return std::numeric_limits<double>::infinity();
        }
        s += (g.inv_root * row).squaredNorm();
    }
    return std::sqrt(s / static_cast<double>(path.segments()));
}

/// product over segments of exp(h_k / m), truncated at level l
inline TruncatedTensor pl_signature(const CMPath& path, std::size_t level) {
    require(level >= 1, ErrorKind::invalid_argument, "signature level must be >= 1");
    require(path.segments() >= 1, ErrorKind::invalid_argument, "path has no segments");
    const double inv_m = 1.0 / static_cast<double>(path.segments());
    std::vector<double> v(path.dim());
    TruncatedTensor out = TruncatedTensor::identity(path.dim(), level);
    for (Eigen::Index k = 0; k < path.h.rows(); ++k) {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = path.h(k, static_cast<Eigen::Index>(i)) * inv_m;
        out = tensor_mul(out, tensor_exp(v, level));
    }
    return out;
}

namespace detail {

/// d/dv_q of exp(v) truncated at `level`: level j = sum_p v^{(x)p} (x) e_q (x) v^{(x)(j-1-p)} / j!
inline TruncatedTensor exp_derivative(const std::vector<double>& v, std::size_t q, std::size_t level) {
    const std::size_t d = v.size();
    TruncatedTensor out(d, level);
    out.level(0)[0] = 0.0;
    std::vector<std::vector<double>> powers(level + 1);
    powers[0] = {1.0};
    for (std::size_t j = 1; j <= level; ++j) {
        powers[j].assign(powers[j - 1].size() * d, 0.0);
        for (std::size_t a = 0; a < powers[j - 1].size(); ++a)
            for (std::size_t b = 0; b < d; ++b) powers[j][a * d + b] = powers[j - 1][a] * v[b];
    }
    double fact = 1.0;
    for (std::size_t j = 1; j <= level; ++j) {
        fact *= static_cast<double>(j);
        auto& o = out.level(j);
        for (std::size_t p = 0; p < j; ++p) {
            const auto& left = powers[p];
            const auto& right = powers[j - 1 - p];
            const std::size_t nr = right.size();
            for (std::size_t a = 0; a < left.size(); ++a)
                for (std::size_t c = 0; c < nr; ++c) o[(a * d + q) * nr + c] += left[a] * right[c] / fact;
        }
    }
    return out;
}

}  // namespace detail

/// analytic gradient of <A, level l of pl_signature(h)> with respect to the m x d entries of h
inline Eigen::MatrixXd signature_gradient(const CMPath& path, const ContractionTensor& A) {
    const std::size_t m = path.segments(), d = path.dim(), L = A.level;
    require(A.dim == d, ErrorKind::dimension_mismatch, "tensor and path dimensions differ");
    const double inv_m = 1.0 / static_cast<double>(m);
    std::vector<std::vector<double>> v(m, std::vector<double>(d));
    std::vector<TruncatedTensor> seg;
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t i = 0; i < d; ++i) v[k][i] = path.h(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) * inv_m;
        seg.push_back(tensor_exp(v[k], L));
    }
    std::vector<TruncatedTensor> prefix(m + 1, TruncatedTensor::identity(d, L)), suffix(m + 1, TruncatedTensor::identity(d, L));
    for (std::size_t k = 0; k < m; ++k) prefix[k + 1] = tensor_mul(prefix[k], seg[k]);
    for (std::size_t k = m; k-- > 0;) suffix[k] = tensor_mul(seg[k], suffix[k + 1]);
    Eigen::MatrixXd grad(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t q = 0; q < d; ++q) {
            const TruncatedTensor t = tensor_mul(tensor_mul(prefix[k], detail::exp_derivative(v[k], q, L)), suffix[k + 1]);
            grad(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(q)) = A.pair(t) * inv_m;
        }
    return grad;
}

inline Eigen::MatrixXd signature_gradient_fd(const CMPath& path, const ContractionTensor& A, double step = 1e-5) {
    Eigen::MatrixXd grad(path.h.rows(), path.h.cols());
    CMPath work = path;
    for (Eigen::Index k = 0; k < path.h.rows(); ++k)
        for (Eigen::Index q = 0; q < path.h.cols(); ++q) {
            const double keep = work.h(k, q);
            work.h(k, q) = keep + step;
            const double up = A.pair(pl_signature(work, A.level));
            work.h(k, q) = keep - step;
            const double down = A.pair(pl_signature(work, A.level));
            work.h(k, q) = keep;
            grad(k, q) = (up - down) / (2.0 * step);
        }
    return grad;
}

enum class GradientRule { finite_difference, analytic };

struct LilConfig {
    std::size_t m = 16;
    std::size_t restarts = 32;
    std::size_t max_iter = 2000;
    double tol = 1e-10;          ///< stop once the step length falls below tol
    double initial_step = 0.5;   ///< in units of the Cameron-Martin norm
    GradientRule gradient = GradientRule::finite_difference;
    double fd_step = 1e-5;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    std::vector<CMPath> initial_paths;  ///< extra starts tried before the random ones
    static constexpr std::size_t max_level = 5;
};

struct LilResult {
    double M = 0.0;
    CMPath argmax;
    std::size_t restarts_used = 0;
    std::size_t best_restart = 0;
    bool converged = false;
    std::vector<double> trace;           ///< objective after each accepted step of the best restart
    std::vector<double> restart_values;  ///< final value per restart
};

/**
 * @brief sup <A, level l of pl_signature(H)> over piecewise-linear H with cm_norm(H) <= 1.
 *
 * Works in z-coordinates h_k = Sigma^{1/2} z_k, where the constraint is the
 * Euclidean ball (1/m) sum |z_k|^2 <= 1 restricted to range(Sigma). Each start
 * runs normalized-gradient ascent with radial projection; the step grows by
 * 1.2 after an improving move and halves otherwise. The zero path is feasible,
 * so M >= 0.
 */
inline LilResult lil_constant(const ContractionTensor& A, const Eigen::MatrixXd& sigma, const LilConfig& cfg = {}) {
    require(A.level >= 1 && A.level <= LilConfig::max_level, ErrorKind::invalid_argument,
            "tensor level must be in 1.." + std::to_string(LilConfig::max_level));
    require(static_cast<std::size_t>(sigma.rows()) == A.dim, ErrorKind::dimension_mismatch,
            "Sigma and tensor dimensions differ");
    require(cfg.m >= 1, ErrorKind::invalid_argument, "need at least one segment");
    require(cfg.restarts + cfg.initial_paths.size() >= 1, ErrorKind::invalid_argument, "need at least one start");
    const auto geo = detail::sigma_geometry(sigma);
    const Eigen::MatrixXd proj = geo.inv_root * geo.root;  // projector onto range(Sigma)
    const std::size_t d = A.dim;
    const auto D = static_cast<Eigen::Index>(d);

    struct Run {
        double value = -std::numeric_limits<double>::infinity();
        Eigen::MatrixXd z;
        bool converged = false;
        std::vector<double> trace;
    };

    auto norm_z = [&](const Eigen::MatrixXd& z) { return std::sqrt(z.squaredNorm() / static_cast<double>(z.rows())); };
    auto to_path = [&](const Eigen::MatrixXd& z) { return CMPath(Eigen::MatrixXd(z * geo.root)); };  // rows h_k^T = z_k^T S
    auto objective = [&](const Eigen::MatrixXd& z) { return A.pair(pl_signature(to_path(z), A.level)); };
    auto gradient = [&](const Eigen::MatrixXd& z) {
        const CMPath p = to_path(z);
        const Eigen::MatrixXd gh = cfg.gradient == GradientRule::analytic ? signature_gradient(p, A)
                                                                          : signature_gradient_fd(p, A, cfg.fd_step);
        return Eigen::MatrixXd(gh * geo.root);
    };
    auto project = [&](Eigen::MatrixXd z) {
        z = z * proj;
        const double n = norm_z(z);
        if (n > 1.0) z /= n;
        return z;
    };

    const std::size_t starts = cfg.initial_paths.size() + cfg.restarts;
    auto run_one = [&](std::size_t r) {
        Eigen::MatrixXd z(static_cast<Eigen::Index>(cfg.m), D);
        if (r < cfg.initial_paths.size()) {
            const CMPath& p0 = cfg.initial_paths[r];
            require(p0.segments() == cfg.m && p0.dim() == d, ErrorKind::dimension_mismatch,
                    "initial path must have m segments and dimension d");
            z = p0.h * geo.inv_root;
        } else {
            RandomStream rng(cfg.seed, r - cfg.initial_paths.size(), stream_tag::restart);
            for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
            z = z * proj;
            const double n = norm_z(z);
            if (n > 0.0) z /= n;
        }
        z = project(z);
        Run run;
        double f = objective(z);
        run.trace.push_back(f);
        double step = cfg.initial_step;
        for (std::size_t it = 0; it < cfg.max_iter; ++it) {
            if (step < cfg.tol) {
                run.converged = true;
                break;
            }
            const Eigen::MatrixXd g = gradient(z);
            const double gn = norm_z(g);
            if (!(gn > 0.0) || !std::isfinite(gn)) {
                run.converged = true;
                break;
            }
            bool moved = false;
            while (step >= cfg.tol) {
                const Eigen::MatrixXd cand = project(z + (step / gn) * g);
                const double fc = objective(cand);
                if (fc > f) {
                    z = cand;
                    f = fc;
                    step *= 1.2;
                    moved = true;
                    run.trace.push_back(f);
                    break;
                }
                step *= 0.5;
            }
            if (!moved) {
                run.converged = true;
                break;
            }
        }
        run.value = f;
        run.z = z;
        return run;
    };

    const auto runs = parallel_map(starts, cfg.threads, run_one);
    LilResult res;
    res.restarts_used = starts;
    std::size_t best = 0;
    for (std::size_t r = 0; r < starts; ++r) {
        res.restart_values.push_back(runs[r].value);
        if (runs[r].value > runs[best].value) best = r;
    }
    res.best_restart = best;
    res.converged = runs[best].converged;
    res.trace = runs[best].trace;
    if (runs[best].value >= 0.0) {
        res.M = runs[best].value;
        res.argmax = to_path(runs[best].z);
    } else {
        res.M = 0.0;
        res.argmax = CMPath(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cfg.m), D));
    }
    return res;
}

}  // namespace roughflow
