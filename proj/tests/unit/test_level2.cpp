#include <gtest/gtest.h>

#include <boost/rational.hpp>
#include <random>

#include "roughflow/tensor/level2.hpp"

using namespace roughflow;
using Q = boost::rational<long long>;
using QLevel2 = BasicLevel2<Q>;

namespace {

QLevel2 random_rational(std::mt19937& g, std::size_t d) {
    std::uniform_int_distribution<int> num(-9, 9), den(1, 6);
    QLevel2 x(d);
    for (auto& v : x.level1()) v = Q(num(g), den(g));
    for (auto& v : x.level2()) v = Q(num(g), den(g));
    return x;
}

Level2 random_real(std::mt19937_64& g, std::size_t d) {
    std::normal_distribution<double> n;
    Level2 x(d);
    for (auto& v : x.level1()) v = n(g);
    for (auto& v : x.level2()) v = n(g);
    return x;
}

}  // namespace

TEST(Level2, IdentityIsNeutral) {
    Level2 x({1.0, -2.0}, {0.5, 1.0, -1.0, 3.0});
    Level2 e = Level2::identity(2);
    EXPECT_EQ(max_abs_diff(star_mul(e, x), x), 0.0);
    EXPECT_EQ(max_abs_diff(star_mul(x, e), x), 0.0);
}

TEST(Level2, ScalarProductFormula) {
    Level2 x({2.0}, {1.0});
    Level2 y({3.0}, {4.0});
    Level2 z = star_mul(x, y);
    EXPECT_EQ(z.a(0), 5.0);
    EXPECT_EQ(z.m(0, 0), 11.0);
}

TEST(Level2, InverseExactInRationals) {
    std::mt19937 g(7);
    for (int t = 0; t < 200; ++t) {
        QLevel2 x = random_rational(g, 1 + t % 3);
        QLevel2 e = star_mul(x, star_inv(x));
        QLevel2 f = star_mul(star_inv(x), x);
        for (const auto& v : e.level1()) EXPECT_EQ(v, Q(0));
        for (const auto& v : e.level2()) EXPECT_EQ(v, Q(0));
        for (const auto& v : f.level2()) EXPECT_EQ(v, Q(0));
    }
}

TEST(Level2, AssociativeInRationals) {
    std::mt19937 g(11);
    for (int t = 0; t < 200; ++t) {
        const std::size_t d = 1 + t % 3;
        QLevel2 x = random_rational(g, d), y = random_rational(g, d), z = random_rational(g, d);
        QLevel2 l = star_mul(star_mul(x, y), z);
        QLevel2 r = star_mul(x, star_mul(y, z));
        EXPECT_EQ(l.level1(), r.level1());
        EXPECT_EQ(l.level2(), r.level2());
    }
}

TEST(Level2, FloatingInverseAndAssociativity) {
    std::mt19937_64 g(3);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t d = 1 + t % 4;
        Level2 x = random_real(g, d), y = random_real(g, d), z = random_real(g, d);
        EXPECT_LE(max_abs_diff(star_mul(x, star_inv(x)), Level2::identity(d)), 1e-12);
        EXPECT_LE(max_abs_diff(star_mul(star_mul(x, y), z), star_mul(x, star_mul(y, z))), 1e-12);
    }
}

TEST(Level2, Dilation) {
    Level2 x({2.0}, {3.0});
    Level2 y = dilate(x, 0.5);
    EXPECT_EQ(y.a(0), 1.0);
    EXPECT_EQ(y.m(0, 0), 0.75);
    EXPECT_EQ(max_abs_diff(dilate(x, 1.0), x), 0.0);
    EXPECT_EQ(max_abs_diff(dilate(x, 0.0), Level2::identity(1)), 0.0);
    EXPECT_THROW(dilate(x, -1.0), Error);
}

TEST(Level2, DilationIsAHomomorphism) {
    std::mt19937_64 g(5);
    for (int t = 0; t < 200; ++t) {
        Level2 x = random_real(g, 2), y = random_real(g, 2);
        const double l = 0.1 + 0.01 * t;
        EXPECT_LE(max_abs_diff(dilate(star_mul(x, y), l), star_mul(dilate(x, l), dilate(y, l))), 1e-12);
    }
}

TEST(Level2, DimensionMismatchIsStructured) {
    try {
        star_mul(Level2(1), Level2(2));
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::dimension_mismatch);
    }
    EXPECT_THROW(Level2(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0}), Error);
}
