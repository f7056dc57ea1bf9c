#include <gtest/gtest.h>

#include <cmath>

#include "roughflow/brownian/brownian.hpp"
#include "roughflow/stats.hpp"

using namespace roughflow;

namespace {

Eigen::MatrixXd mat1(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

}  // namespace

TEST(Brownian, ItoIdentityResidualInOneDimension) {
    const double h = 0.01;
    const std::size_t K = 16;
    auto s = sample_brp(BrownianParams::ito(mat1(1.0)), 100.0, h, K, 1);
    ASSERT_EQ(s.path.cells(), 10000u);
    double ss = 0.0;
    for (std::size_t c = 0; c < s.path.cells(); ++c) {
        const double dw = s.path.cell_level1(c)[0];
        const double exact = 0.5 * (dw * dw - h);
        ss += std::pow(s.path.cell_level2(c)[0] - exact, 2);
    }
    const double rms = std::sqrt(ss / 10000.0);
    EXPECT_LE(rms, 5.0 * std::sqrt(h * h / K));
    // the residual is (sum delta^2 - h) / 2 whose RMS is h / sqrt(2K)
    EXPECT_NEAR(rms, h / std::sqrt(2.0 * K), 0.1 * h / std::sqrt(2.0 * K));
}

TEST(Brownian, AreaMeanIsGamma) {
    Eigen::MatrixXd S(2, 2), G(2, 2);
    S << 1.0, 0.3, 0.3, 0.5;
    G << 0.2, -0.4, 0.1, 0.0;
    const double h = 0.05;
    auto s = sample_brp(BrownianParams(S, G), 500.0, h, 8, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            std::vector<double> v;
            for (std::size_t c = 0; c < s.path.cells(); ++c) v.push_back(s.path.cell_level2(c)[i * 2 + j] - G(i, j) * h);
            EXPECT_LE(mean_estimate(v).z(0.0), 4.0);
        }
}

TEST(Brownian, IncrementCovariance) {
    const double h = 0.1;
    auto s = sample_brp(BrownianParams::ito(Eigen::MatrixXd::Identity(2, 2)), 1000.0, h, 1, 3);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            std::vector<double> x, y;
            for (std::size_t c = 0; c < s.path.cells(); ++c) {
                x.push_back(s.path.cell_level1(c)[i]);
                y.push_back(s.path.cell_level1(c)[j]);
            }
            EXPECT_LE(covariance_estimate(x, y).z(i == j ? h : 0.0), 4.0);
        }
}

TEST(Brownian, NonPsdCovarianceIsRejected) {
    Eigen::MatrixXd S(2, 2);
    S << 1.0, 2.0, 2.0, 1.0;
    EXPECT_THROW(BrownianParams::ito(S), Error);
    Eigen::MatrixXd Z(2, 2);
    Z << 1.0, 1.0, 1.0, 1.0;
    EXPECT_NO_THROW(BrownianParams::ito(Z));
    EXPECT_THROW(sample_brp(BrownianParams::ito(mat1(1.0)), 1.0, 0.3, 2, 1), Error);
}

TEST(Rescale, IdentityAndDilation) {
    auto u = sample_brp(BrownianParams::ito(mat1(1.0)), 64.0, 1.0, 4, 5);
    auto same = rescale(u, 1.0, 64.0);
    EXPECT_EQ(same.path.cell_level1_data(), u.path.cell_level1_data());
    EXPECT_EQ(same.path.cell_level2_data(), u.path.cell_level2_data());
    auto w = rescale(u, 16.0, 1.0);
    EXPECT_EQ(w.path.cells(), 16u);
    EXPECT_NEAR(w.mesh, 1.0 / 16.0, 1e-15);
    const double lhs = homogeneous_norm(w.path, 2.5);
    const double rhs = homogeneous_norm(u.path.restrict_to({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16}), 2.5);
    EXPECT_NEAR(lhs, rhs / 4.0, 1e-12 * rhs);
    EXPECT_THROW(rescale(u, 128.0, 1.0), Error);
}

TEST(Rescale, PreservesVariance) {
    std::vector<double> a, b;
    for (std::uint64_t r = 0; r < 4000; ++r) {
        auto u = sample_brp(BrownianParams::ito(mat1(1.0)), 4.0, 0.5, 1, 9, r);
        a.push_back(u.path.prefix_level1(2)[0]);  // W(1)
        b.push_back(rescale(u, 4.0, 1.0).path.prefix_level1(8)[0]);  // W_4(1)
    }
    auto va = covariance_estimate(a, a), vb = covariance_estimate(b, b);
    EXPECT_LE(two_sample_z(va, vb), 4.0);
    EXPECT_LE(vb.z(1.0), 4.0);
}

TEST(EmLift, ExactAtPartitionPoints) {
    Eigen::MatrixXd S(2, 2);
    S << 1.0, 0.2, 0.2, 2.0;
    auto s = sample_brp(BrownianParams::ito(S), 1.0, 1.0 / 64, 4, 4);
    auto e = em_lift(s, 8);
    ASSERT_TRUE(same_grid(e, s.path));
    for (std::size_t k = 0; k <= 64; k += 8)
        for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(e.prefix_level1(k)[i], s.path.prefix_level1(k)[i], 1e-15);
    // piecewise constant between coarse points
    for (std::size_t k = 1; k < 8; ++k) EXPECT_EQ(e.prefix_level1(k)[0], e.prefix_level1(0)[0]);
    EXPECT_THROW(em_lift(s, 3), Error);
    auto c = em_lift_coarse(s, 8);
    EXPECT_EQ(c.cells(), 8u);
    EXPECT_LE(max_abs_diff(c.rebased_increment(0, 8), e.rebased_increment(0, 64)), 1e-14);
}

TEST(EmLift, OneDimensionalAreaFormula) {
    auto s = sample_brp(BrownianParams::ito(mat1(1.0)), 1.0, 1.0 / 32, 4, 6);
    auto e = em_lift(s, 4);
    double sum = 0, sq = 0;
    for (std::size_t k = 1; k <= 4; ++k) {
        const double d = s.path.prefix_level1(8 * k)[0] - s.path.prefix_level1(8 * (k - 1))[0];
        sum += d;
        sq += d * d;
    }
    EXPECT_NEAR(e.rebased_increment(0, 32).m(0, 0), 0.5 * (sum * sum - sq), 1e-14);
}

TEST(LilDiagnostic, RatiosBoundedAndScaling) {
    std::vector<std::size_t> Ns;
    for (std::size_t N = 16; N <= 4096; N *= 2) Ns.push_back(N);
    auto rows = lil_diagnostic(BrownianParams::ito(mat1(1.0)), 2.5, Ns, 3);
    std::vector<double> ratios;
    for (auto& r : rows) ratios.push_back(r.ratio_sqrtloglog);
    EXPECT_LE(*std::max_element(ratios.begin(), ratios.end()), 10.0 * median(ratios));
    auto rows2 = lil_diagnostic(BrownianParams::ito(mat1(2.0)), 2.5, Ns, 3);
    for (std::size_t k = 0; k < rows.size(); ++k) EXPECT_NEAR(rows2[k].norm, std::sqrt(2.0) * rows[k].norm, 1e-10 * rows[k].norm);
    EXPECT_THROW(lil_diagnostic(BrownianParams::ito(mat1(1.0)), 2.5, {8, 16}, 1), Error);
}

TEST(LilDiagnostic, NormDominatesEndpointIncrement) {
    auto u = sample_brp(BrownianParams::ito(mat1(1.0)), 1.0, 1.0 / 64, 4, 8);
    EXPECT_GE(homogeneous_norm(u.path, 2.5), std::abs(u.path.prefix_level1(64)[0]));
}
