#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "roughflow/error.hpp"
#include "roughflow/rng.hpp"
#include "roughflow/tensor/rough_path.hpp"
#include "roughflow/tensor/variation.hpp"

namespace roughflow {

/// symmetric square root of a PSD matrix; eigenvalues in [-tol, 0) are clipped
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& S, double tol = 1e-12) {
    require(S.rows() == S.cols(), ErrorKind::dimension_mismatch, "covariance must be square");
    require((S - S.transpose()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, S.cwiseAbs().maxCoeff()),
            ErrorKind::invalid_argument, "covariance must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()));
    Eigen::VectorXd ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        require(ev(i) >= -tol * std::max(1.0, S.cwiseAbs().maxCoeff()), ErrorKind::invalid_argument,
                "covariance is not positive semidefinite (eigenvalue " + std::to_string(ev(i)) + ")");
        ev(i) = std::sqrt(std::max(0.0, ev(i)));
    }
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

/**
 * @brief Parameters (Sigma, Gamma) of a Brownian rough path.
 *
 * The second level is the Ito iterated integral plus Gamma (t - s); Gamma = Sigma / 2
 * gives the Stratonovich lift.
 */
class BrownianParams {
  public:
    BrownianParams() = default;

    BrownianParams(Eigen::MatrixXd sigma, Eigen::MatrixXd gamma) : sigma_(std::move(sigma)), gamma_(std::move(gamma)) {
        require(sigma_.rows() >= 1, ErrorKind::dimension_mismatch, "sigma must be non-empty");
        require(gamma_.rows() == sigma_.rows() && gamma_.cols() == sigma_.cols(), ErrorKind::dimension_mismatch,
                "gamma must have the shape of sigma");
        require(gamma_.allFinite(), ErrorKind::invalid_argument, "gamma has non-finite entries");
        root_ = psd_sqrt(sigma_);
    }

    static BrownianParams ito(Eigen::MatrixXd sigma) {
        const auto d = sigma.rows();
        return BrownianParams(std::move(sigma), Eigen::MatrixXd::Zero(d, d));
    }
    static BrownianParams stratonovich(Eigen::MatrixXd sigma) {
        Eigen::MatrixXd g = 0.5 * sigma;
        return BrownianParams(std::move(sigma), std::move(g));
    }

    std::size_t dim() const { return static_cast<std::size_t>(sigma_.rows()); }
    const Eigen::MatrixXd& sigma() const { return sigma_; }
    const Eigen::MatrixXd& gamma() const { return gamma_; }
    const Eigen::MatrixXd& sigma_root() const { return root_; }

  private:
    Eigen::MatrixXd sigma_, gamma_, root_;
};

struct GridRoughSample {
    CadlagRoughPath path;
    double mesh = 1.0;
    std::size_t substeps = 1;
    std::uint64_t seed = 0;
    BrownianParams params;
};

namespace detail {

inline std::size_t cells_for(double T, double h) {
    require(h > 0.0 && T > 0.0, ErrorKind::invalid_argument, "need T > 0 and mesh h > 0");
    const double r = T / h;
    const double n = std::round(r);
    require(n >= 1.0 && std::abs(r - n) <= 1e-9 * std::max(1.0, r), ErrorKind::invalid_argument,
            "mesh must divide the horizon");
    return static_cast<std::size_t>(n);
}

inline std::vector<double> uniform_grid(std::size_t n, double T) {
    std::vector<double> g(n + 1);
    for (std::size_t k = 0; k <= n; ++k) g[k] = T * static_cast<double>(k) / static_cast<double>(n);
    return g;
}

}  // namespace detail

/**
 * @brief Brownian rough path on a uniform mesh h over [0,T].
 *
 * Each cell draws K Gaussian substeps with covariance Sigma h / K. The first
 * level is their sum (exactly Gaussian); the second level is the left-point
 * sum sum_{a<b} delta_a (x) delta_b, an O(h / sqrt K) approximation of the Ito
 * area in L^2, plus Gamma h.
 */
inline GridRoughSample sample_brp(const BrownianParams& params, double T, double h, std::size_t K, RandomStream& rng) {
    require(K >= 1, ErrorKind::invalid_argument, "substeps K must be >= 1");
    const std::size_t n = detail::cells_for(T, h);
    const std::size_t d = params.dim();
    const double sub = std::sqrt(h / static_cast<double>(K));
    std::vector<double> a(n * d), m(n * d * d);
    std::vector<double> z(d), delta(d), run(d), area(d * d);
    const Eigen::MatrixXd& R = params.sigma_root();
    for (std::size_t c = 0; c < n; ++c) {
        std::fill(run.begin(), run.end(), 0.0);
        std::fill(area.begin(), area.end(), 0.0);
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t i = 0; i < d; ++i) z[i] = rng.normal();
            for (std::size_t i = 0; i < d; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < d; ++j)
                    s += R(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * z[j];
                delta[i] = sub * s;
            }
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j) area[i * d + j] += run[i] * delta[j];
            for (std::size_t i = 0; i < d; ++i) run[i] += delta[i];
        }
        for (std::size_t i = 0; i < d; ++i) a[c * d + i] = run[i];
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                m[(c * d + i) * d + j] =
                    area[i * d + j] + params.gamma()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * h;
    }
    GridRoughSample out;
    out.path = CadlagRoughPath(d, detail::uniform_grid(n, T), std::move(a), std::move(m));
    out.mesh = h;
    out.substeps = K;
    out.params = params;
    return out;
}

inline GridRoughSample sample_brp(const BrownianParams& params, double T, double h, std::size_t K, std::uint64_t seed,
                                  std::uint64_t replica = 0) {
    RandomStream rng(seed, replica, stream_tag::brownian);
    GridRoughSample s = sample_brp(params, T, h, K, rng);
    s.seed = seed;
    return s;
}

/**
 * @brief W_N(t) = N^{-1/2} W(Nt) from a universal sample on [0, N T].
 *
 * Level 1 scales by N^{-1/2}, level 2 by N^{-1}, time by N^{-1}. Only the part
 * of the universal sample on [0, N T] is used.
 */
inline GridRoughSample rescale(const GridRoughSample& universal, double N, double T) {
    require(N > 0.0 && T > 0.0, ErrorKind::invalid_argument, "rescale needs N > 0 and T > 0");
    const double horizon = N * T;
    const std::size_t n = detail::cells_for(horizon, universal.mesh);
    require(n <= universal.path.cells(), ErrorKind::invalid_argument,
            "universal sample is shorter than N T");
    const std::size_t d = universal.path.dim();
    std::vector<double> a(universal.path.cell_level1_data().begin(),
                          universal.path.cell_level1_data().begin() + static_cast<long>(n * d));
    std::vector<double> m(universal.path.cell_level2_data().begin(),
                          universal.path.cell_level2_data().begin() + static_cast<long>(n * d * d));
    const double s1 = 1.0 / std::sqrt(N), s2 = 1.0 / N;
    for (auto& v : a) v *= s1;
    for (auto& v : m) v *= s2;
    GridRoughSample out = universal;
    out.path = CadlagRoughPath(d, detail::uniform_grid(n, T), std::move(a), std::move(m));
    out.mesh = universal.mesh / N;
    return out;
}

namespace detail {
inline std::size_t coarse_stride(const GridRoughSample& sample, std::size_t N) {
    require(N >= 1, ErrorKind::invalid_argument, "em_lift needs N >= 1");
    const double T = sample.path.end_time() - sample.path.start_time();
    const std::size_t coarse = cells_for(T, 1.0 / static_cast<double>(N));
    require(sample.path.cells() % coarse == 0, ErrorKind::invalid_argument,
            "coarse resolution " + std::to_string(N) + " does not divide the sample grid");
    return sample.path.cells() / coarse;
}
}  // namespace detail

/**
 * @brief Euler-Maruyama (piecewise constant) lift on the sample's own grid.
 *
 * The cell ending at each coarse point k/N jumps by W(k/N) - W((k-1)/N), all
 * other cells are zero, so the lift equals W at coarse points and its second
 * level is the iterated sum of coarse increments. Sharing the fine grid makes
 * rough_distance against the sample directly computable.
 */
inline CadlagRoughPath em_lift(const GridRoughSample& sample, std::size_t N) {
    const std::size_t stride = detail::coarse_stride(sample, N);
    const auto& x = sample.path;
    const std::size_t d = x.dim(), n = x.cells();
    std::vector<double> a(n * d, 0.0), m(n * d * d, 0.0);
    for (std::size_t e = stride; e <= n; e += stride)
        for (std::size_t i = 0; i < d; ++i)
            a[(e - 1) * d + i] = x.prefix_level1(e)[i] - x.prefix_level1(e - stride)[i];
    return CadlagRoughPath(d, x.grid(), std::move(a), std::move(m));
}

/// the same piecewise-constant lift on the coarse grid only
inline CadlagRoughPath em_lift_coarse(const GridRoughSample& sample, std::size_t N) {
    const std::size_t stride = detail::coarse_stride(sample, N);
    const auto& x = sample.path;
    const std::size_t d = x.dim(), n = x.cells();
    std::vector<double> grid{x.time(0)}, a;
    for (std::size_t e = stride; e <= n; e += stride) {
        grid.push_back(x.time(e));
        for (std::size_t i = 0; i < d; ++i) a.push_back(x.prefix_level1(e)[i] - x.prefix_level1(e - stride)[i]);
    }
    const std::size_t c = grid.size() - 1;
    return CadlagRoughPath(d, std::move(grid), std::move(a), std::vector<double>(c * d * d, 0.0));
}

struct LilRow {
    std::size_t N = 0;
    double norm = 0.0;
    double ratio_sqrtloglog = 0.0;
    double ratio_loglog = 0.0;
};

struct LilOptions {
    std::size_t substeps = 4;
    std::size_t eval_cells = 4096;  ///< norms are evaluated on at most this many cells
};

/**
 * @brief Homogeneous norms of W_N on [0,1] from one universal sample.
 *
 * When N exceeds `eval_cells` the norm is computed on the Chen-coarsened path
 * at every (N / eval_cells)-th point, which is exact at those points and
 * therefore a lower bound for the fine-grid value.
 */
inline std::vector<LilRow> lil_diagnostic(const BrownianParams& params, double p, const std::vector<std::size_t>& N_list,
                                          std::uint64_t seed, const LilOptions& opt = {}) {
    require(!N_list.empty(), ErrorKind::invalid_argument, "N_list is empty");
    for (std::size_t k = 0; k < N_list.size(); ++k) {
        require(N_list[k] >= 16, ErrorKind::invalid_argument, "N_list entries must be >= 16");
        if (k > 0) require(N_list[k] > N_list[k - 1], ErrorKind::invalid_argument, "N_list must be increasing");
    }
    const std::size_t Nmax = N_list.back();
    GridRoughSample universal = sample_brp(params, static_cast<double>(Nmax), 1.0, opt.substeps, seed);
    std::vector<LilRow> rows;
    for (std::size_t N : N_list) {
        GridRoughSample w = rescale(universal, static_cast<double>(N), 1.0);
        CadlagRoughPath x = w.path;
        if (x.cells() > opt.eval_cells) {
            const std::size_t stride = (x.cells() + opt.eval_cells - 1) / opt.eval_cells;
            std::vector<std::size_t> idx;
            for (std::size_t i = 0; i < x.cells(); i += stride) idx.push_back(i);
            idx.push_back(x.cells());
            x = x.restrict_to(idx);
        }
        LilRow r;
        r.N = N;
        r.norm = homogeneous_norm(x, p);
        const double ll = std::log(std::log(static_cast<double>(N)));
        r.ratio_sqrtloglog = r.norm / std::sqrt(ll);
        r.ratio_loglog = r.norm / ll;
        rows.push_back(r);
    }
    return rows;
}

}  // namespace roughflow
