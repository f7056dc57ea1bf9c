#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "roughflow/error.hpp"
#include "roughflow/rng.hpp"

namespace roughflow {

struct FieldCheckOptions {
    bool enabled = true;
    std::size_t points = 5;
    double step = 1e-6;
    double rel_tol = 1e-5;
    double scale = 1.0;
    std::uint64_t seed = 12345;
};

/**
 * @brief Vector fields of dX = b(X) dA + sigma(X) dU.
 *
 * sigma maps R^e to e x d matrices; dsigma(x)[k] is the partial derivative
 * d sigma / d x_k (an e x d matrix). The derivative is checked against central
 * finite differences at construction.
 */
class FieldSpec {
  public:
    using Vec = Eigen::VectorXd;
    using Mat = Eigen::MatrixXd;
    using Drift = std::function<Vec(const Vec&)>;
    using Diffusion = std::function<Mat(const Vec&)>;
    using Jacobian = std::function<std::vector<Mat>(const Vec&)>;

    using CheckOptions = FieldCheckOptions;

    FieldSpec() = default;

    FieldSpec(std::size_t e, std::size_t d, Drift b, Diffusion sigma, Jacobian dsigma, double bound = 1.0,
              std::string family = "custom", CheckOptions check = {})
        : e_(e), d_(d), b_(std::move(b)), sigma_(std::move(sigma)), dsigma_(std::move(dsigma)), bound_(bound),
          family_(std::move(family)) {
        require(e_ >= 1 && d_ >= 1, ErrorKind::invalid_argument, "field dimensions must be >= 1");
        require(b_ && sigma_ && dsigma_, ErrorKind::invalid_argument, "field callables must be set");
        if (check.enabled) verify_derivative(check);
    }

    std::size_t e() const { return e_; }
    std::size_t d() const { return d_; }
    double bound() const { return bound_; }
    const std::string& family() const { return family_; }

    Vec b(const Vec& x) const { return b_(x); }
    Mat sigma(const Vec& x) const { return sigma_(x); }
    std::vector<Mat> dsigma(const Vec& x) const { return dsigma_(x); }

    const Drift& drift_fn() const { return b_; }

    /// copy with the drift replaced (e.g. by b + c)
    FieldSpec with_drift(Drift b, std::string family_suffix = "") const {
        FieldSpec out = *this;
        out.b_ = std::move(b);
        out.family_ += family_suffix;
        return out;
    }

    /// max relative error of dsigma against central differences over random points
    double derivative_error(const CheckOptions& check) const {
        RandomStream rng(check.seed);
        double worst = 0.0;
        for (std::size_t p = 0; p < check.points; ++p) {
            Vec x(static_cast<Eigen::Index>(e_));
            for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = check.scale * rng.normal();
            const Mat s = sigma_(x);
            require(static_cast<std::size_t>(s.rows()) == e_ && static_cast<std::size_t>(s.cols()) == d_,
                    ErrorKind::dimension_mismatch, "sigma must return an e x d matrix");
            const Vec bx = b_(x);
            require(static_cast<std::size_t>(bx.size()) == e_, ErrorKind::dimension_mismatch,
                    "b must return an e-vector");
            const std::vector<Mat> ds = dsigma_(x);
            require(ds.size() == e_, ErrorKind::dimension_mismatch, "dsigma must return e matrices");
            for (std::size_t k = 0; k < e_; ++k) {
                require(static_cast<std::size_t>(ds[k].rows()) == e_ && static_cast<std::size_t>(ds[k].cols()) == d_,
                        ErrorKind::dimension_mismatch, "dsigma[k] must be e x d");
                Vec xp = x, xm = x;
                xp(static_cast<Eigen::Index>(k)) += check.step;
                xm(static_cast<Eigen::Index>(k)) -= check.step;
                const Mat fd = (sigma_(xp) - sigma_(xm)) / (2.0 * check.step);
                const double scale = std::max(1.0, ds[k].cwiseAbs().maxCoeff());
                worst = std::max(worst, (fd - ds[k]).cwiseAbs().maxCoeff() / scale);
            }
        }
        return worst;
    }

  private:
    void verify_derivative(const CheckOptions& check) const {
        const double err = derivative_error(check);
        require(err <= check.rel_tol, ErrorKind::invalid_argument,
                "dsigma disagrees with finite differences of sigma (relative error " + std::to_string(err) + ")");
    }

    std::size_t e_ = 0, d_ = 0;
    Drift b_;
    Diffusion sigma_;
    Jacobian dsigma_;
    double bound_ = 1.0;
    std::string family_;
};

namespace fields {

using Vec = FieldSpec::Vec;
using Mat = FieldSpec::Mat;

/// sigma and b constant
inline FieldSpec constant(const Mat& sigma, const Vec& b) {
    const auto e = static_cast<std::size_t>(sigma.rows()), d = static_cast<std::size_t>(sigma.cols());
    require(static_cast<std::size_t>(b.size()) == e, ErrorKind::dimension_mismatch, "b must have e entries");
    return FieldSpec(
        e, d, [b](const Vec&) { return b; }, [sigma](const Vec&) { return sigma; },
        [e, d](const Vec&) { return std::vector<Mat>(e, Mat::Zero(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(d))); },
        std::max({1.0, sigma.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()}), "constant");
}

inline FieldSpec identity(std::size_t e) {
    FieldSpec f = constant(Mat::Identity(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(e)),
                           Vec::Zero(static_cast<Eigen::Index>(e)));
    return f;
}

/// e = d = 1: sigma(x) = c0 + c1 sin(x), b(x) = b0 + b1 cos(x)
inline FieldSpec sine1d(double c0, double c1, double b0 = 0.0, double b1 = 0.0) {
    return FieldSpec(
        1, 1, [b0, b1](const Vec& x) { return Vec::Constant(1, b0 + b1 * std::cos(x(0))); },
        [c0, c1](const Vec& x) { return Mat::Constant(1, 1, c0 + c1 * std::sin(x(0))); },
        [c1](const Vec& x) { return std::vector<Mat>{Mat::Constant(1, 1, c1 * std::cos(x(0)))}; },
        std::max(1.0, std::abs(c0) + std::abs(c1) + std::abs(b0) + std::abs(b1)), "sine1d");
}

/// e = d = 1: sigma(x) = a x, b(x) = beta x (unbounded; guarded by the solver)
inline FieldSpec linear1d(double a, double beta = 0.0) {
    return FieldSpec(
        1, 1, [beta](const Vec& x) { return Vec::Constant(1, beta * x(0)); },
        [a](const Vec& x) { return Mat::Constant(1, 1, a * x(0)); },
        [a](const Vec&) { return std::vector<Mat>{Mat::Constant(1, 1, a)}; }, INFINITY, "linear1d");
}

/// sigma_{.j}(x) = A_j x, b(x) = B x (unbounded; guarded by the solver)
inline FieldSpec linear(const std::vector<Mat>& A, const Mat& B) {
    require(!A.empty(), ErrorKind::invalid_argument, "linear field needs at least one matrix");
    const auto e = static_cast<std::size_t>(B.rows()), d = A.size();
    for (const auto& M : A)
        require(static_cast<std::size_t>(M.rows()) == e && static_cast<std::size_t>(M.cols()) == e,
                ErrorKind::dimension_mismatch, "linear field matrices must be e x e");
    require(static_cast<std::size_t>(B.cols()) == e, ErrorKind::dimension_mismatch, "B must be e x e");
    return FieldSpec(
        e, d, [B](const Vec& x) { return Vec(B * x); },
        [A, e, d](const Vec& x) {
            Mat s(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(d));
            for (std::size_t j = 0; j < d; ++j) s.col(static_cast<Eigen::Index>(j)) = A[j] * x;
            return s;
        },
        [A, e, d](const Vec&) {
            std::vector<Mat> ds(e, Mat(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(d)));
            for (std::size_t k = 0; k < e; ++k)
                for (std::size_t j = 0; j < d; ++j)
                    ds[k].col(static_cast<Eigen::Index>(j)) = A[j].col(static_cast<Eigen::Index>(k));
            return ds;
        },
        INFINITY, "linear");
}

/**
 * @brief Trigonometric family with exact derivatives:
 *   sigma_ij(x) = A_ij + C_ij sin(w_ij . x + phi_ij),  b_i(x) = beta_i + g_i cos(v_i . x + psi_i).
 */
struct TrigParams {
    Mat A, C, phi;                 ///< e x d
    std::vector<Vec> w;            ///< e*d frequency vectors in R^e, row-major over (i,j)
    Vec beta, g, psi;              ///< e
    std::vector<Vec> v;            ///< e frequency vectors
};

inline FieldSpec trigonometric(const TrigParams& P) {
    const auto e = static_cast<std::size_t>(P.A.rows()), d = static_cast<std::size_t>(P.A.cols());
    require(P.C.rows() == P.A.rows() && P.C.cols() == P.A.cols() && P.phi.rows() == P.A.rows() &&
                P.phi.cols() == P.A.cols() && P.w.size() == e * d && P.beta.size() == P.A.rows() &&
                P.g.size() == P.A.rows() && P.psi.size() == P.A.rows() && P.v.size() == e,
            ErrorKind::dimension_mismatch, "trigonometric field parameters have inconsistent shapes");
    auto sigma = [P, e, d](const Vec& x) {
        Mat s(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < e; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                const auto I = static_cast<Eigen::Index>(i), J = static_cast<Eigen::Index>(j);
                s(I, J) = P.A(I, J) + P.C(I, J) * std::sin(P.w[i * d + j].dot(x) + P.phi(I, J));
            }
        return s;
    };
    auto dsigma = [P, e, d](const Vec& x) {
        std::vector<Mat> out(e, Mat(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(d)));
        for (std::size_t i = 0; i < e; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                const auto I = static_cast<Eigen::Index>(i), J = static_cast<Eigen::Index>(j);
                const double c = P.C(I, J) * std::cos(P.w[i * d + j].dot(x) + P.phi(I, J));
                for (std::size_t k = 0; k < e; ++k) out[k](I, J) = c * P.w[i * d + j](static_cast<Eigen::Index>(k));
            }
        return out;
    };
    auto b = [P, e](const Vec& x) {
        Vec out(static_cast<Eigen::Index>(e));
        for (std::size_t i = 0; i < e; ++i) {
            const auto I = static_cast<Eigen::Index>(i);
            out(I) = P.beta(I) + P.g(I) * std::cos(P.v[i].dot(x) + P.psi(I));
        }
        return out;
    };
    const double L = std::max(1.0, (P.A.cwiseAbs() + P.C.cwiseAbs()).maxCoeff() + (P.beta.cwiseAbs() + P.g.cwiseAbs()).maxCoeff());
    return FieldSpec(e, d, b, sigma, dsigma, L, "trigonometric");
}

/// random smooth bounded member of the trigonometric family
inline FieldSpec random_trigonometric(std::size_t e, std::size_t d, std::uint64_t seed, double amplitude = 0.5) {
    RandomStream rng(seed, 0, 0x7419);
    auto u = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
    const auto E = static_cast<Eigen::Index>(e), D = static_cast<Eigen::Index>(d);
    TrigParams P;
    P.A = Mat(E, D);
    P.C = Mat(E, D);
    P.phi = Mat(E, D);
    for (Eigen::Index i = 0; i < E; ++i)
        for (Eigen::Index j = 0; j < D; ++j) {
            P.A(i, j) = u(-1.0, 1.0);
            P.C(i, j) = u(-amplitude, amplitude);
            P.phi(i, j) = u(0.0, 6.283185307179586);
        }
    for (std::size_t k = 0; k < e * d; ++k) {
        Vec w(E);
        for (Eigen::Index i = 0; i < E; ++i) w(i) = u(-1.5, 1.5);
        P.w.push_back(w);
    }
    P.beta = Vec(E);
    P.g = Vec(E);
    P.psi = Vec(E);
    for (Eigen::Index i = 0; i < E; ++i) {
        P.beta(i) = u(-0.5, 0.5);
        P.g(i) = u(-0.5, 0.5);
        P.psi(i) = u(0.0, 6.283185307179586);
        Vec v(E);
        for (Eigen::Index k = 0; k < E; ++k) v(k) = u(-1.5, 1.5);
        P.v.push_back(v);
    }
    return trigonometric(P);
}

}  // namespace fields

}  // namespace roughflow
