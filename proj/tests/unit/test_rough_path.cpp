#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "roughflow/tensor/lift.hpp"
#include "roughflow/tensor/path_csv.hpp"
#include "roughflow/tensor/rough_path.hpp"

using namespace roughflow;

namespace {

CadlagRoughPath random_path(std::mt19937_64& g, std::size_t d, std::size_t n, bool with_area = true) {
    std::normal_distribution<double> nd;
    std::vector<double> grid(n + 1), a(n * d), m(n * d * d, 0.0);
    double t = 0.0;
    for (auto& s : grid) {
        s = t;
        t += 0.1 + std::abs(nd(g));
    }
    for (auto& v : a) v = nd(g);
    if (with_area)
        for (auto& v : m) v = nd(g);
    return CadlagRoughPath(d, grid, a, m);
}

std::vector<double> random_sequence(std::mt19937_64& g, std::size_t n, std::size_t d) {
    std::normal_distribution<double> nd;
    std::vector<double> xi(n * d);
    for (auto& v : xi) v = nd(g);
    return xi;
}

}  // namespace

TEST(RoughPath, ChenRelationOnAllTriples) {
    std::mt19937_64 g(1);
    for (int rep = 0; rep < 20; ++rep) {
        auto x = random_path(g, 1 + rep % 3, 9);
        for (std::size_t s = 0; s <= x.cells(); ++s)
            for (std::size_t t = s; t <= x.cells(); ++t)
                for (std::size_t u = t; u <= x.cells(); ++u) {
                    Level2 lhs = star_mul(x.rebased_increment(s, t), x.rebased_increment(t, u));
                    EXPECT_LE(max_abs_diff(lhs, x.rebased_increment(s, u)), 1e-12);
                }
    }
}

TEST(RoughPath, SingleCellSpanIsTheCell) {
    std::mt19937_64 g(2);
    auto x = random_path(g, 2, 5);
    for (std::size_t k = 0; k < x.cells(); ++k) EXPECT_LE(max_abs_diff(x.rebased_increment(k, k + 1), x.cell(k)), 1e-14);
    EXPECT_EQ(max_abs_diff(x.rebased_increment(3, 3), Level2::identity(2)), 0.0);
}

TEST(RoughPath, PlainAndRebasedConventions) {
    // d=1, cells (1, 0), (2, 0): UU(0,2) = 1*2 = 2, UU(0,1) = 0
    CadlagRoughPath x(1, {0.0, 1.0, 2.0}, {1.0, 2.0}, {0.0, 0.0});
    Level2 plain = x.span_increment(1, 2);
    Level2 rebased = x.rebased_increment(1, 2);
    EXPECT_EQ(plain.a(0), 2.0);
    EXPECT_EQ(rebased.a(0), 2.0);
    EXPECT_EQ(plain.m(0, 0), 2.0);
    EXPECT_EQ(rebased.m(0, 0), 0.0);
}

TEST(RoughPath, GridValidation) {
    EXPECT_THROW(CadlagRoughPath(1, {0.0, 0.0}, {1.0}, {0.0}), Error);
    EXPECT_THROW(CadlagRoughPath(1, {0.0, 1.0}, {1.0, 2.0}, {0.0}), Error);
    CadlagRoughPath x(1, {0.0, 0.5, 1.0}, {1.0, 1.0}, {0.0, 0.0});
    EXPECT_EQ(x.grid_index(0.5), 1u);
    EXPECT_THROW(x.grid_index(0.3), Error);
    EXPECT_EQ(x.index_at_or_before(0.7), 1u);
}

TEST(RoughPath, RestrictionIsExactAtKeptPoints) {
    std::mt19937_64 g(3);
    auto x = random_path(g, 2, 12);
    std::vector<std::size_t> keep{0, 3, 4, 9, 12};
    auto y = x.restrict_to(keep);
    for (std::size_t i = 0; i < keep.size(); ++i)
        for (std::size_t j = i; j < keep.size(); ++j)
            EXPECT_LE(max_abs_diff(y.rebased_increment(i, j), x.rebased_increment(keep[i], keep[j])), 1e-12);
}

TEST(CanonicalLift, TwoOnes) {
    auto x = canonical_lift({1.0, 1.0}, 1, 2);
    Level2 s = lift_increment(x, 2, 0.0, 1.0);
    EXPECT_NEAR(s.a(0), std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(s.m(0, 0), 0.5, 1e-15);
    Level2 z = lift_increment(x, 2, 0.0, 0.4);
    EXPECT_EQ(z.a(0), 0.0);
    EXPECT_EQ(z.m(0, 0), 0.0);
}

TEST(CanonicalLift, OrderedPairsInTwoDimensions) {
    auto x = canonical_lift({1.0, 0.0, 0.0, 1.0}, 2, 2);
    Level2 s = x.rebased_increment(0, 2);
    EXPECT_NEAR(s.m(0, 1), 0.5, 1e-15);
    EXPECT_NEAR(s.m(1, 0), 0.0, 1e-15);
    EXPECT_NEAR(s.a(0) * s.a(1), s.m(0, 1) + s.m(1, 0) + 0.0, 1e-15);
}

TEST(CanonicalLift, FrozenIteratedSums) {
    // enumerated ordered pairs of xi = (1,0),(0,1),(1,1),(-1,2), N = 4
    auto x = canonical_lift({1, 0, 0, 1, 1, 1, -1, 2}, 2, 4);
    Level2 s = x.rebased_increment(0, 4);
    EXPECT_NEAR(s.m(0, 0), -0.25, 1e-15);
    EXPECT_NEAR(s.m(0, 1), 1.5, 1e-15);
    EXPECT_NEAR(s.m(1, 0), -0.25, 1e-15);
    EXPECT_NEAR(s.m(1, 1), 1.25, 1e-15);
}

TEST(CanonicalLift, MatchesDirectSummationOnEverySpan) {
    std::mt19937_64 g(4);
    const std::size_t d = 3, n = 17, N = 16;
    auto xi = random_sequence(g, n, d);
    auto x = canonical_lift(xi, d, N);
    for (std::size_t s = 0; s <= n; ++s)
        for (std::size_t t = s; t <= n; ++t) {
            Level2 inc = x.rebased_increment(s, t);
            for (std::size_t i = 0; i < d; ++i) {
                double S = 0.0;
                for (std::size_t k = s; k < t; ++k) S += xi[k * d + i];
                EXPECT_NEAR(inc.a(i), S / 4.0, 1e-12);
                for (std::size_t j = 0; j < d; ++j) {
                    double SS = 0.0;
                    for (std::size_t k = s; k < t; ++k)
                        for (std::size_t l = k + 1; l < t; ++l) SS += xi[k * d + i] * xi[l * d + j];
                    EXPECT_NEAR(inc.m(i, j), SS / 16.0, 1e-12);
                }
            }
        }
}

TEST(CanonicalLift, SymmetricIdentity) {
    std::mt19937_64 g(5);
    const std::size_t d = 2, n = 30, N = 8;
    auto xi = random_sequence(g, n, d);
    auto x = canonical_lift(xi, d, N);
    for (std::size_t s = 0; s <= n; s += 3)
        for (std::size_t t = s; t <= n; t += 2) {
            Level2 inc = x.rebased_increment(s, t);
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j) {
                    double diag = 0.0;
                    for (std::size_t k = s; k < t; ++k) diag += xi[k * d + i] * xi[k * d + j];
                    EXPECT_NEAR(inc.m(i, j) + inc.m(j, i) + diag / N, inc.a(i) * inc.a(j), 1e-12);
                }
        }
}

TEST(CanonicalLift, EmptySequence) {
    auto x = canonical_lift({}, 2, 4);
    EXPECT_EQ(x.cells(), 0u);
    EXPECT_EQ(max_abs_diff(x.rebased_increment(0, 0), Level2::identity(2)), 0.0);
    EXPECT_THROW(canonical_lift({1.0, NAN}, 1, 1), Error);
}

TEST(RoughPath, DilationScalesSpans) {
    std::mt19937_64 g(6);
    auto x = random_path(g, 2, 7);
    auto y = dilate(x, 0.3);
    for (std::size_t s = 0; s <= 7; ++s)
        for (std::size_t t = s; t <= 7; ++t)
            EXPECT_LE(max_abs_diff(y.rebased_increment(s, t), dilate(x.rebased_increment(s, t), 0.3)), 1e-12);
}

TEST(PathCsv, RoundTripIsBitIdentical) {
    std::mt19937_64 g(7);
    for (int rep = 0; rep < 10; ++rep) {
        auto x = random_path(g, 1 + rep % 3, 25);
        auto text = path_to_csv(x);
        auto y = path_from_csv(text);
        EXPECT_EQ(y.grid(), x.grid());
        EXPECT_EQ(y.cell_level1_data(), x.cell_level1_data());
        EXPECT_EQ(y.cell_level2_data(), x.cell_level2_data());
        EXPECT_EQ(path_to_csv(y), text);
    }
}

TEST(PathCsv, HeaderAndErrors) {
    CadlagRoughPath x(2, {0.0, 1.0}, {1.0, 2.0}, {0.0, 0.5, -0.5, 0.0});
    auto text = path_to_csv(x);
    EXPECT_EQ(text.substr(0, text.find('\n')), "t,u_1,u_2,m_11,m_12,m_21,m_22");
    EXPECT_THROW(path_from_csv("t,u_1,m_11\n0,0,0\n1,abc,0\n"), Error);
    EXPECT_THROW(path_from_csv("t,u_1,m_11,extra\n"), Error);
}
