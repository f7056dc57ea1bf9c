#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "roughflow/error.hpp"

namespace roughflow {

/**
 * @brief Element of the truncated tensor algebra T^{(L)}(R^d).
 *
 * Level k (1 <= k <= L) holds d^k coefficients indexed by words
 * (i_1..i_k) in row-major order; level 0 is 1 for group-like elements but is
 * stored so that general series also work.
 */
template <class Scalar>
class BasicTruncatedTensor {
  public:
    BasicTruncatedTensor() = default;

    BasicTruncatedTensor(std::size_t dim, std::size_t depth) : dim_(dim), depth_(depth), levels_(depth + 1) {
        require(dim >= 1, ErrorKind::invalid_argument, "tensor dimension must be >= 1");
        std::size_t sz = 1;
        for (std::size_t k = 0; k <= depth; ++k) {
            levels_[k].assign(sz, Scalar(0));
            sz *= dim;
        }
        levels_[0][0] = Scalar(1);
    }

    static BasicTruncatedTensor identity(std::size_t dim, std::size_t depth) {
        return BasicTruncatedTensor(dim, depth);
    }

    std::size_t dim() const { return dim_; }
    std::size_t depth() const { return depth_; }

    std::vector<Scalar>& level(std::size_t k) { return levels_.at(k); }
    const std::vector<Scalar>& level(std::size_t k) const { return levels_.at(k); }

    /// coefficient of the word (i_1, ..., i_k)
    const Scalar& coeff(const std::vector<std::size_t>& word) const {
        return levels_.at(word.size()).at(flat(word));
    }
    Scalar& coeff(const std::vector<std::size_t>& word) { return levels_.at(word.size()).at(flat(word)); }

  private:
    std::size_t flat(const std::vector<std::size_t>& word) const {
        std::size_t idx = 0;
        for (auto i : word) {
            require(i < dim_, ErrorKind::invalid_argument, "word letter out of range");
            idx = idx * dim_ + i;
        }
        return idx;
    }

    std::size_t dim_ = 0;
    std::size_t depth_ = 0;
    std::vector<std::vector<Scalar>> levels_;
};

using TruncatedTensor = BasicTruncatedTensor<double>;

/// level k of the product is sum_{i+j=k} x_i (x) y_j
template <class Scalar>
BasicTruncatedTensor<Scalar> tensor_mul(const BasicTruncatedTensor<Scalar>& x, const BasicTruncatedTensor<Scalar>& y) {
    require(x.dim() == y.dim() && x.depth() == y.depth(), ErrorKind::dimension_mismatch,
            "tensor_mul: shapes (d=" + std::to_string(x.dim()) + ", L=" + std::to_string(x.depth()) +
                ") and (d=" + std::to_string(y.dim()) + ", L=" + std::to_string(y.depth()) + ")");
    BasicTruncatedTensor<Scalar> out(x.dim(), x.depth());
    out.level(0)[0] = Scalar(0);
    for (std::size_t k = 0; k <= x.depth(); ++k) {
        auto& o = out.level(k);
        for (std::size_t i = 0; i <= k; ++i) {
            const auto& a = x.level(i);
            const auto& b = y.level(k - i);
            const std::size_t nb = b.size();
            for (std::size_t p = 0; p < a.size(); ++p) {
                if (a[p] == Scalar(0)) continue;
                for (std::size_t q = 0; q < nb; ++q) o[p * nb + q] += a[p] * b[q];
            }
        }
    }
    return out;
}

/// truncated exponential of a level-1 vector: level j = v^{(x) j} / j!
inline TruncatedTensor tensor_exp(const std::vector<double>& v, std::size_t depth) {
    TruncatedTensor out(v.size(), depth);
    const std::size_t d = v.size();
    for (std::size_t k = 1; k <= depth; ++k) {
        const auto& prev = out.level(k - 1);
        auto& cur = out.level(k);
        for (std::size_t p = 0; p < prev.size(); ++p)
            for (std::size_t q = 0; q < d; ++q) cur[p * d + q] = prev[p] * v[q] / static_cast<double>(k);
    }
    return out;
}

/// in-place right multiplication by the group-like element (1, x, 0, ..., 0)
inline void append_jump(TruncatedTensor& t, const double* x) {
    const std::size_t d = t.dim();
    for (std::size_t k = t.depth(); k >= 1; --k) {
        const auto& lower = t.level(k - 1);
        auto& cur = t.level(k);
        for (std::size_t p = 0; p < lower.size(); ++p) {
            const double a = lower[p];
            if (a == 0.0) continue;
            for (std::size_t q = 0; q < d; ++q) cur[p * d + q] += a * x[q];
        }
    }
}

inline double max_abs_diff(const TruncatedTensor& x, const TruncatedTensor& y) {
    require(x.dim() == y.dim() && x.depth() == y.depth(), ErrorKind::dimension_mismatch,
            "max_abs_diff: tensor shapes differ");
    double r = 0.0;
    for (std::size_t k = 0; k <= x.depth(); ++k)
        for (std::size_t i = 0; i < x.level(k).size(); ++i)
            r = std::max(r, std::abs(x.level(k)[i] - y.level(k)[i]));
    return r;
}

}  // namespace roughflow
