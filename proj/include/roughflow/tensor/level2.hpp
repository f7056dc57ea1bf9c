#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "roughflow/error.hpp"

namespace roughflow {

/**
 * @brief Element (a, M) of the step-2 group over R^d.
 *
 * The product is (a,M)*(b,N) = (a+b, M + a(x)b + N); the second level is
 * stored row-major, M(i,j) = m[i*d+j].
 */
template <class Scalar>
class BasicLevel2 {
  public:
    BasicLevel2() = default;

    explicit BasicLevel2(std::size_t dim)
        : dim_(dim), a_(dim, Scalar(0)), m_(dim * dim, Scalar(0)) {}

    BasicLevel2(std::vector<Scalar> a, std::vector<Scalar> m)
        : dim_(a.size()), a_(std::move(a)), m_(std::move(m)) {
        require(m_.size() == dim_ * dim_, ErrorKind::dimension_mismatch,
                "second level must have d*d = " + std::to_string(dim_ * dim_) + " entries, got " +
                    std::to_string(m_.size()));
    }

    static BasicLevel2 identity(std::size_t dim) { return BasicLevel2(dim); }

    std::size_t dim() const { return dim_; }

    const std::vector<Scalar>& level1() const { return a_; }
    const std::vector<Scalar>& level2() const { return m_; }
    std::vector<Scalar>& level1() { return a_; }
    std::vector<Scalar>& level2() { return m_; }

    const Scalar& a(std::size_t i) const { return a_[i]; }
    const Scalar& m(std::size_t i, std::size_t j) const { return m_[i * dim_ + j]; }
    Scalar& a(std::size_t i) { return a_[i]; }
    Scalar& m(std::size_t i, std::size_t j) { return m_[i * dim_ + j]; }

  private:
    std::size_t dim_ = 0;
    std::vector<Scalar> a_;
    std::vector<Scalar> m_;
};

using Level2 = BasicLevel2<double>;

template <class Scalar>
BasicLevel2<Scalar> star_mul(const BasicLevel2<Scalar>& x, const BasicLevel2<Scalar>& y) {
    require(x.dim() == y.dim(), ErrorKind::dimension_mismatch,
            "star_mul: dimensions " + std::to_string(x.dim()) + " and " + std::to_string(y.dim()));
    const std::size_t d = x.dim();
    BasicLevel2<Scalar> out(d);
    for (std::size_t i = 0; i < d; ++i) out.a(i) = x.a(i) + y.a(i);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) out.m(i, j) = x.m(i, j) + x.a(i) * y.a(j) + y.m(i, j);
    return out;
}

template <class Scalar>
BasicLevel2<Scalar> star_inv(const BasicLevel2<Scalar>& x) {
    const std::size_t d = x.dim();
    BasicLevel2<Scalar> out(d);
    for (std::size_t i = 0; i < d; ++i) out.a(i) = -x.a(i);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) out.m(i, j) = -x.m(i, j) + x.a(i) * x.a(j);
    return out;
}

/// (a, M) -> (lambda a, lambda^2 M)
template <class Scalar>
BasicLevel2<Scalar> dilate(const BasicLevel2<Scalar>& x, const Scalar& lambda) {
    require(!(lambda < Scalar(0)), ErrorKind::invalid_argument, "dilate: lambda must be nonnegative");
    BasicLevel2<Scalar> out = x;
    for (auto& v : out.level1()) v = lambda * v;
    const Scalar l2 = lambda * lambda;
    for (auto& v : out.level2()) v = l2 * v;
    return out;
}

inline double level1_norm(const Level2& x) {
    double s = 0.0;
    for (double v : x.level1()) s += v * v;
    return std::sqrt(s);
}

inline double level2_norm(const Level2& x) {
    double s = 0.0;
    for (double v : x.level2()) s += v * v;
    return std::sqrt(s);
}

/// max-abs distance between two elements, used by tolerance checks
inline double max_abs_diff(const Level2& x, const Level2& y) {
    require(x.dim() == y.dim(), ErrorKind::dimension_mismatch, "max_abs_diff: dimension mismatch");
    double r = 0.0;
    for (std::size_t i = 0; i < x.dim(); ++i) r = std::max(r, std::abs(x.a(i) - y.a(i)));
    for (std::size_t k = 0; k < x.level2().size(); ++k)
        r = std::max(r, std::abs(x.level2()[k] - y.level2()[k]));
    return r;
}

}  // namespace roughflow
