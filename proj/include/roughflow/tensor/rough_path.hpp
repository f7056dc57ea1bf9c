#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "roughflow/error.hpp"
#include "roughflow/tensor/level2.hpp"

namespace roughflow {

/**
 * @brief Level-2 rough path on a finite grid, stored as per-cell increments.
 *
 * Increments over spans of grid points are derived from prefix products
 * P_i = cell_0 * ... * cell_{i-1}, so Chen's relation holds by construction.
 * Two span conventions are available:
 *   - rebased_increment(i,j) = P_i^{-1} * P_j, the rough-path increment
 *     (U(s,t), UU(s,t)) used by every metric and solver;
 *   - span_increment(i,j) = (U(t)-U(s), UU(0,t)-UU(0,s)), the plain difference
 *     of the running values.
 * Both share the same first level.
 */
class CadlagRoughPath {
  public:
    CadlagRoughPath() = default;

    CadlagRoughPath(std::size_t dim, std::vector<double> grid, std::vector<double> level1,
                    std::vector<double> level2)
        : dim_(dim), grid_(std::move(grid)), l1_(std::move(level1)), l2_(std::move(level2)) {
        require(dim_ >= 1, ErrorKind::invalid_argument, "rough path dimension must be >= 1");
        require(!grid_.empty(), ErrorKind::invalid_argument, "rough path grid must contain t_0");
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            require(std::isfinite(grid_[i]), ErrorKind::invalid_argument, "grid time is not finite");
            if (i > 0)
                require(grid_[i] > grid_[i - 1], ErrorKind::invalid_argument,
                        "grid must be strictly increasing (index " + std::to_string(i) + ")");
        }
        const std::size_t n = grid_.size() - 1;
        require(l1_.size() == n * dim_, ErrorKind::dimension_mismatch,
                "level1 must hold cells*d = " + std::to_string(n * dim_) + " values");
        require(l2_.size() == n * dim_ * dim_, ErrorKind::dimension_mismatch,
                "level2 must hold cells*d*d = " + std::to_string(n * dim_ * dim_) + " values");
        build_prefix();
    }

    /// zero increments on the given grid
    static CadlagRoughPath zero(std::size_t dim, std::vector<double> grid) {
        const std::size_t n = grid.empty() ? 0 : grid.size() - 1;
        return CadlagRoughPath(dim, std::move(grid), std::vector<double>(n * dim, 0.0),
                               std::vector<double>(n * dim * dim, 0.0));
    }

    std::size_t dim() const { return dim_; }
    std::size_t cells() const { return grid_.empty() ? 0 : grid_.size() - 1; }
    const std::vector<double>& grid() const { return grid_; }
    double time(std::size_t i) const { return grid_[i]; }
    double start_time() const { return grid_.front(); }
    double end_time() const { return grid_.back(); }

    const std::vector<double>& cell_level1_data() const { return l1_; }
    const std::vector<double>& cell_level2_data() const { return l2_; }
    const double* cell_level1(std::size_t k) const { return l1_.data() + k * dim_; }
    const double* cell_level2(std::size_t k) const { return l2_.data() + k * dim_ * dim_; }

    Level2 cell(std::size_t k) const {
        check_cell(k);
        return Level2(std::vector<double>(cell_level1(k), cell_level1(k) + dim_),
                      std::vector<double>(cell_level2(k), cell_level2(k) + dim_ * dim_));
    }

    /// running value U(t_0, t_i)
    const double* prefix_level1(std::size_t i) const { return pa_.data() + i * dim_; }
    /// running value UU(t_0, t_i)
    const double* prefix_level2(std::size_t i) const { return pm_.data() + i * dim_ * dim_; }

    /// Chen-rebased increment between grid indices i <= j, written into raw buffers
    void rebased_into(std::size_t i, std::size_t j, double* a, double* m) const {
        const double* ai = prefix_level1(i);
        const double* aj = prefix_level1(j);
        const double* mi = prefix_level2(i);
        const double* mj = prefix_level2(j);
        for (std::size_t p = 0; p < dim_; ++p) a[p] = aj[p] - ai[p];
        for (std::size_t p = 0; p < dim_; ++p)
            for (std::size_t q = 0; q < dim_; ++q)
                m[p * dim_ + q] = mj[p * dim_ + q] - mi[p * dim_ + q] - ai[p] * a[q];
    }

    Level2 rebased_increment(std::size_t i, std::size_t j) const {
        check_span(i, j);
        Level2 out(dim_);
        rebased_into(i, j, out.level1().data(), out.level2().data());
        return out;
    }

    Level2 span_increment(std::size_t i, std::size_t j) const {
        check_span(i, j);
        Level2 out(dim_);
        for (std::size_t p = 0; p < dim_; ++p) out.a(p) = prefix_level1(j)[p] - prefix_level1(i)[p];
        for (std::size_t p = 0; p < dim_ * dim_; ++p)
            out.level2()[p] = prefix_level2(j)[p] - prefix_level2(i)[p];
        return out;
    }

    /// index of grid point t; throws off_grid if t is not a grid time within tol
    std::size_t grid_index(double t, double tol = 1e-12) const {
        auto it = std::lower_bound(grid_.begin(), grid_.end(), t - tol);
        if (it == grid_.end() || std::abs(*it - t) > tol * std::max(1.0, std::abs(t)))
            throw Error(ErrorKind::off_grid, "time " + std::to_string(t) + " is not a grid point");
        return static_cast<std::size_t>(it - grid_.begin());
    }

    /// index of the last grid point <= t (cadlag evaluation)
    std::size_t index_at_or_before(double t) const {
        require(t >= grid_.front() - 1e-12, ErrorKind::off_grid, "time precedes the grid");
        auto it = std::upper_bound(grid_.begin(), grid_.end(), t + 1e-12);
        return static_cast<std::size_t>(it - grid_.begin()) - 1;
    }

    /// coarser path on the selected grid points (strictly increasing indices), exact at those points
    CadlagRoughPath restrict_to(const std::vector<std::size_t>& idx) const {
        require(!idx.empty(), ErrorKind::invalid_argument, "restrict_to needs at least one index");
        std::vector<double> g;
        std::vector<double> a, m;
        g.reserve(idx.size());
        std::vector<double> ta(dim_), tm(dim_ * dim_);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            require(idx[k] <= cells(), ErrorKind::off_grid, "restrict_to index beyond grid");
            if (k > 0)
                require(idx[k] > idx[k - 1], ErrorKind::invalid_argument,
                        "restrict_to indices must be strictly increasing");
            g.push_back(grid_[idx[k]]);
            if (k > 0) {
                rebased_into(idx[k - 1], idx[k], ta.data(), tm.data());
                a.insert(a.end(), ta.begin(), ta.end());
                m.insert(m.end(), tm.begin(), tm.end());
            }
        }
        return CadlagRoughPath(dim_, std::move(g), std::move(a), std::move(m));
    }

    /// same increments on a different grid (e.g. rescaled time)
    CadlagRoughPath with_grid(std::vector<double> grid) const {
        return CadlagRoughPath(dim_, std::move(grid), l1_, l2_);
    }

  private:
    void check_cell(std::size_t k) const {
        require(k < cells(), ErrorKind::off_grid, "cell index " + std::to_string(k) + " out of range");
    }
    void check_span(std::size_t i, std::size_t j) const {
        require(i <= j && j <= cells(), ErrorKind::off_grid,
                "span [" + std::to_string(i) + "," + std::to_string(j) + "] outside grid of " +
                    std::to_string(cells()) + " cells");
    }

    void build_prefix() {
        const std::size_t n = cells();
        const std::size_t d = dim_;
        pa_.assign((n + 1) * d, 0.0);
        pm_.assign((n + 1) * d * d, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const double* A = pa_.data() + k * d;
            const double* M = pm_.data() + k * d * d;
            double* A1 = pa_.data() + (k + 1) * d;
            double* M1 = pm_.data() + (k + 1) * d * d;
            const double* x = cell_level1(k);
            const double* xm = cell_level2(k);
            for (std::size_t p = 0; p < d; ++p) A1[p] = A[p] + x[p];
            for (std::size_t p = 0; p < d; ++p)
                for (std::size_t q = 0; q < d; ++q)
                    M1[p * d + q] = M[p * d + q] + A[p] * x[q] + xm[p * d + q];
        }
    }

    std::size_t dim_ = 0;
    std::vector<double> grid_;
    std::vector<double> l1_, l2_;
    std::vector<double> pa_, pm_;
};

/// delta_lambda applied cell-wise; spans dilate accordingly
inline CadlagRoughPath dilate(const CadlagRoughPath& x, double lambda) {
    require(lambda >= 0.0, ErrorKind::invalid_argument, "dilate: lambda must be nonnegative");
    std::vector<double> a = x.cell_level1_data();
    std::vector<double> m = x.cell_level2_data();
    for (auto& v : a) v *= lambda;
    for (auto& v : m) v *= lambda * lambda;
    return CadlagRoughPath(x.dim(), x.grid(), std::move(a), std::move(m));
}

inline bool same_grid(const CadlagRoughPath& x, const CadlagRoughPath& y) {
    return x.dim() == y.dim() && x.grid() == y.grid();
}

}  // namespace roughflow
