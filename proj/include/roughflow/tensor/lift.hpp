#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "roughflow/error.hpp"
#include "roughflow/tensor/rough_path.hpp"
#include "roughflow/tensor/truncated_tensor.hpp"
#include "roughflow/tensor/variation.hpp"

namespace roughflow {

/**
 * @brief Canonical lift of a discrete sequence xi(0..n-1) at resolution N.
 *
 * Grid k/N for k = 0..n; cell k jumps by xi(k)/sqrt(N) with zero in-cell
 * second level, so spans carry the scaled iterated sums
 * N^{-1} sum_{s<=k<l<t} xi(k) (x) xi(l). `xi` is row-major n x d.
 */
inline CadlagRoughPath canonical_lift(const std::vector<double>& xi, std::size_t dim, std::size_t N) {
    require(N >= 1, ErrorKind::invalid_argument, "canonical_lift: N must be >= 1");
    require(dim >= 1 && xi.size() % dim == 0, ErrorKind::dimension_mismatch,
            "canonical_lift: sequence length is not a multiple of d");
    const std::size_t n = xi.size() / dim;
    const double scale = 1.0 / std::sqrt(static_cast<double>(N));
    std::vector<double> grid(n + 1);
    for (std::size_t k = 0; k <= n; ++k) grid[k] = static_cast<double>(k) / static_cast<double>(N);
    std::vector<double> a(xi.size());
    for (std::size_t i = 0; i < xi.size(); ++i) {
        require(std::isfinite(xi[i]), ErrorKind::invalid_argument, "canonical_lift: non-finite entry");
        a[i] = xi[i] * scale;
    }
    return CadlagRoughPath(dim, std::move(grid), std::move(a), std::vector<double>(n * dim * dim, 0.0));
}

/// grid index [tN] of a lift at resolution N (cadlag evaluation point)
inline std::size_t lift_index(double t, std::size_t N) {
    require(t >= 0.0, ErrorKind::invalid_argument, "lift_index: negative time");
    return static_cast<std::size_t>(std::floor(t * static_cast<double>(N) + 1e-9));
}

/// (S_N(s,t), SS_N(s,t)) evaluated at times s <= t on a canonical lift
inline Level2 lift_increment(const CadlagRoughPath& lift, std::size_t N, double s, double t) {
    const std::size_t i = std::min(lift_index(s, N), lift.cells());
    const std::size_t j = std::min(lift_index(t, N), lift.cells());
    require(i <= j, ErrorKind::invalid_argument, "lift_increment: s must not exceed t");
    return lift.rebased_increment(i, j);
}

/**
 * @brief Lyons extension of a piecewise-constant lift over grid span [i, j].
 *
 * Level k holds the k-fold iterated sums of the cell jumps; only valid for
 * paths whose cells carry no second-level increment.
 */
inline TruncatedTensor lyons_extend(const CadlagRoughPath& x, std::size_t depth, std::size_t i, std::size_t j,
                                    double tol = 1e-12) {
    require(depth >= 1, ErrorKind::invalid_argument, "lyons_extend: depth must be >= 1");
    require(i <= j && j <= x.cells(), ErrorKind::off_grid, "lyons_extend: span outside grid");
    TruncatedTensor out(x.dim(), depth);
    for (std::size_t k = i; k < j; ++k) {
        const double* m = x.cell_level2(k);
        for (std::size_t q = 0; q < x.dim() * x.dim(); ++q)
            require(std::abs(m[q]) <= tol, ErrorKind::invalid_argument,
                    "lyons_extend: cell " + std::to_string(k) + " carries a second-level increment");
        append_jump(out, x.cell_level1(k));
    }
    return out;
}

inline TruncatedTensor lyons_extend(const CadlagRoughPath& x, std::size_t depth) {
    return lyons_extend(x, depth, 0, x.cells());
}

}  // namespace roughflow
