#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "roughflow/mixing/spec_io.hpp"
#include "roughflow/mixing/suspension.hpp"
#include "roughflow/tensor/lift.hpp"

using namespace roughflow;

namespace {

MarkovMixingSpec raw_chain(const Eigen::MatrixXd& P, const Eigen::MatrixXd& g) {
    return MarkovMixingSpec(P, g, Centering::keep);
}

Eigen::MatrixXd sym2() {
    Eigen::MatrixXd P(2, 2);
    P << 0.7, 0.3, 0.3, 0.7;
    return P;
}

Eigen::MatrixXd asym2() {
    Eigen::MatrixXd P(2, 2);
    P << 0.7, 0.3, 0.6, 0.4;
    return P;
}

double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int k = 1; k < n; ++k) s += f(a + k * h) * (k % 2 ? 4 : 2);
    return s * h / 3;
}

}  // namespace

TEST(Suspension, ConstantFiberStatistics) {
    Eigen::MatrixXd g(2, 2);
    g << 1, 2, -1, -2;
    SuspensionSpec spec(raw_chain(sym2(), g), {0.5, 0.5}, FiberMode::constant);
    EXPECT_NEAR(spec.tau_bar(), 0.5, 1e-15);
    // symmetric chain and equal roofs: no centering shift, F = g_i g_j tau^2 / 2
    EXPECT_NEAR(spec.centering_shift().norm(), 0.0, 1e-15);
    for (int s = 0; s < 2; ++s)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) EXPECT_NEAR(spec.fiber_area()(s, i * 2 + j), g(s, i) * g(s, j) * 0.125, 1e-15);
}

TEST(Suspension, CenteringByRoofWeights) {
    Eigen::MatrixXd g(2, 1);
    g << 1, -1;
    SuspensionSpec spec(raw_chain(asym2(), g), {0.5, 1.5}, FiberMode::constant);
    EXPECT_NEAR(spec.tau_bar(), 5.0 / 6.0, 1e-14);
    EXPECT_NEAR(spec.centering_shift()(0), -0.2, 1e-14);
    EXPECT_NEAR(spec.eta()(0, 0), 0.6, 1e-14);
    EXPECT_NEAR(spec.eta()(1, 0), -1.2, 1e-14);
    EXPECT_NEAR((spec.base().pi().transpose() * spec.eta())(0), 0.0, 1e-14);
    // F = (g - c)^2 tau^2 / 2 per state
    EXPECT_NEAR(spec.fiber_area()(0, 0), 1.44 * 0.125, 1e-14);
    EXPECT_NEAR(spec.fiber_area()(1, 0), 0.64 * 1.125, 1e-14);
    EXPECT_NEAR(spec.mean_fiber_area()(0, 0), 0.5 * spec.mean_eta_eta()(0, 0), 1e-14);
}

TEST(Suspension, PolynomialFiberIntegralsMatchQuadrature) {
    SuspensionSpec::FiberPolys polys{{{1.0, -2.0, 0.5}, {0.0, 1.0}}, {{-0.5, 0.0, 1.0}, {2.0, -1.0, 0.0, 0.3}}};
    SuspensionSpec spec(raw_chain(asym2(), Eigen::MatrixXd::Zero(2, 2)), {0.8, 1.6}, FiberMode::polynomial, polys);
    for (std::size_t s = 0; s < 2; ++s) {
        const double tau = spec.tau()[s];
        for (std::size_t i = 0; i < 2; ++i) {
            auto xi_i = [&](double u) { return spec.xi(s, i, u); };
            EXPECT_NEAR(spec.eta()(s, i), simpson(xi_i, 0, tau), 1e-12);
            for (std::size_t j = 0; j < 2; ++j) {
                auto integrand = [&](double u) { return spec.xi(s, j, u) * simpson(xi_i, 0, u, 200); };
                EXPECT_NEAR(spec.fiber_area()(s, i * 2 + j), simpson(integrand, 0, tau, 400), 1e-10);
            }
        }
        double inc[2], area[4], inc2[2], area2[4], full_inc[2], full_area[4];
        spec.segment(s, 0.0, 0.3, inc, area);
        spec.segment(s, 0.3, tau, inc2, area2);
        spec.segment(s, 0.0, tau, full_inc, full_area);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                EXPECT_NEAR(area[i * 2 + j] + inc[i] * inc2[j] + area2[i * 2 + j], full_area[i * 2 + j], 1e-13);
    }
    EXPECT_NEAR((spec.base().pi().transpose() * spec.eta()).norm(), 0.0, 1e-14);
    // polynomial fibers break the symmetry of F
    Eigen::MatrixXd EF = spec.mean_fiber_area();
    EXPECT_GT(std::abs(EF(0, 1) - EF(1, 0)), 1e-3);
    EXPECT_LE((EF + EF.transpose() - spec.mean_eta_eta()).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Suspension, UnitRoofReducesToDiscreteSums) {
    Eigen::MatrixXd g(2, 1);
    g << 1, -1;
    SuspensionSpec spec(raw_chain(sym2(), g), {1.0, 1.0}, FiberMode::constant);
    const double eps = 0.1;
    auto rec = suspension_sample(spec, eps, 1.0, 11, 0);
    EXPECT_NEAR(spec.tau_bar(), 1.0, 1e-15);
    for (double s : {0.0, 0.5, 3.0, 17.2, 99.9}) EXPECT_EQ(rec.renewal_count(s), static_cast<std::size_t>(std::floor(s)));
    // V(t) = eps sum_{k < floor(t / eps^2)} g(state_k) on grid points
    const auto& x = rec.path;
    for (std::size_t k = 0; k <= 100; k += 7) {
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) sum += g(static_cast<Eigen::Index>(rec.states[j]), 0);
        EXPECT_NEAR(x.prefix_level1(k)[0], eps * sum, 1e-12);
        EXPECT_NEAR(x.time(k), k * eps * eps, 1e-12);
    }
}

TEST(Suspension, BreakpointsBecomeGridPoints) {
    Eigen::MatrixXd g(2, 1);
    g << 1, -1;
    SuspensionSpec spec(raw_chain(asym2(), g), {0.5, 1.5}, FiberMode::constant);
    auto rec = suspension_sample(spec, 0.125, 2.0, 5, 0, {1.0, 1.37});
    EXPECT_NO_THROW(rec.path.grid_index(1.0));
    EXPECT_NO_THROW(rec.path.grid_index(1.37));
    EXPECT_EQ(rec.path.end_time(), 2.0);
    // total V(2) equals eps times the integral over all fibers up to the horizon
    const double H = 2.0 * spec.tau_bar() / (0.125 * 0.125);
    double integral = 0.0;
    for (std::size_t k = 0; k < rec.states.size(); ++k) {
        const double a = rec.renewal_times[k];
        const double b = std::min(rec.renewal_times[k + 1], H);
        double inc[1], area[1];
        spec.segment(rec.states[k], 0.0, b - a, inc, area);
        integral += inc[0];
    }
    EXPECT_NEAR(rec.path.prefix_level1(rec.path.cells())[0], 0.125 * integral, 1e-12);
}

TEST(Suspension, RenewalSandwichAndCrudeBound) {
    Eigen::MatrixXd g(2, 1);
    g << 1, -1;
    SuspensionSpec spec(raw_chain(asym2(), g), {0.5, 1.5}, FiberMode::constant);
    auto rec = suspension_sample(spec, 0.05, 1.0, 3, 0);
    const double Lh = spec.roof_bound();
    const double top = rec.renewal_times.back();
    for (double s = 0.0; s < top; s += 0.37) {
        const std::size_t n = rec.renewal_count(s);
        EXPECT_LE(rec.renewal_times[n], s);
        EXPECT_GT(rec.renewal_times[n + 1], s);
    }
    for (double s = 0.0; s * spec.tau_bar() < top; s += 1.1) {
        const double n = static_cast<double>(rec.renewal_count(s * spec.tau_bar()));
        EXPECT_LE(std::abs(n - s), Lh * Lh * (1.0 + s));
    }
}

TEST(Suspension, RenewalFluctuationsGrowLikeSquareRoot) {
    Eigen::MatrixXd g(2, 1);
    g << 1, -1;
    SuspensionSpec spec(raw_chain(asym2(), g), {0.5, 1.5}, FiberMode::constant);
    const std::vector<double> svals{25, 50, 100, 200, 400, 800, 1600};
    std::vector<double> ms(svals.size(), 0.0);
    const int R = 400;
    for (int r = 0; r < R; ++r) {
        auto rec = suspension_sample(spec, 0.025, 1.0, 77, static_cast<std::uint64_t>(r));
        for (std::size_t k = 0; k < svals.size(); ++k) {
            const double dev = static_cast<double>(rec.renewal_count(svals[k] * spec.tau_bar())) - svals[k];
            ms[k] += dev * dev / R;
        }
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(svals.size());
    for (std::size_t k = 0; k < svals.size(); ++k) {
        const double x = std::log(svals[k]), y = 0.5 * std::log(ms[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    EXPECT_NEAR(slope, 0.5, 0.15);
}

TEST(Suspension, ParseFromJson) {
    auto j = nlohmann::json::parse(
        R"({"states":2,"P":[[0.7,0.3],[0.6,0.4]],"g":[1,-1],"tau":[0.5,1.5],"fiber_mode":"constant"})");
    auto spec = parse_suspension(j);
    EXPECT_NEAR(spec.tau_bar(), 5.0 / 6.0, 1e-14);
    auto k = nlohmann::json::parse(
        R"({"states":2,"P":[[0.7,0.3],[0.6,0.4]],"tau":[0.5,1.5],"fiber_mode":"polynomial","fiber_poly":[[[1,1]],[[0,-1]]]})");
    EXPECT_EQ(parse_suspension(k).mode(), FiberMode::polynomial);
    EXPECT_THROW(parse_suspension(nlohmann::json::parse(
                     R"({"states":2,"P":[[0.7,0.3],[0.6,0.4]],"g":[1,-1],"tau":[0.5,-1],"fiber_mode":"constant"})")),
                 Error);
}
