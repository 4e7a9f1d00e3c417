#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "boldseg/rng.hpp"

using namespace boldseg;

TEST(RngStream, SameSeedSameSequence) {
    RngStream a(42), b(42);
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.uniform(), b.uniform());
}

TEST(RngStream, DifferentSeedsDiffer) {
    RngStream a(1), b(2);
    int same = 0;
    for (int i = 0; i < 100; ++i) same += a.uniform() == b.uniform();
    EXPECT_LT(same, 3);
}

TEST(RngStream, UniformInUnitInterval) {
    RngStream r(7);
    for (int i = 0; i < 10000; ++i) {
        double u = r.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
}

TEST(RngStream, UniformIntInclusiveBounds) {
    RngStream r(9);
    bool lo_hit = false, hi_hit = false;
    for (int i = 0; i < 5000; ++i) {
        int v = r.uniform_int(2, 5);
        EXPECT_GE(v, 2);
        EXPECT_LE(v, 5);
        lo_hit |= v == 2;
        hi_hit |= v == 5;
    }
    EXPECT_TRUE(lo_hit);
    EXPECT_TRUE(hi_hit);
    EXPECT_EQ(r.uniform_int(3, 3), 3);
}

TEST(RngStream, NormalUsesTwoDrawsAlways) {
    RngStream r(11);
    auto before = r.draw_count();
    r.normal();
    EXPECT_EQ(r.draw_count(), before + 2);
    r.normal();
    EXPECT_EQ(r.draw_count(), before + 4);
}

TEST(RngStream, NormalMomentsRoughlyStandard) {
    RngStream r(13);
    const int n = 20000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        double x = r.normal();
        s += x;
        s2 += x * x;
    }
    double mean = s / n, var = s2 / n - mean * mean;
    EXPECT_NEAR(mean, 0.0, 0.03);
    EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(RngStream, ScaledNormal) {
    RngStream a(17), b(17);
    double x = a.normal();
    EXPECT_DOUBLE_EQ(b.normal(3.0, 2.0), 3.0 + 2.0 * x);
}

TEST(RngStream, ForkIsDeterministicAndDecorrelated) {
    RngStream root(21);
    RngStream c1 = root.fork(0);
    RngStream c2 = root.fork(1);
    RngStream c1b = RngStream(21).fork(0);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(c1.uniform(), c1b.uniform());
    RngStream c1c = root.fork(0);
    int same = 0;
    for (int i = 0; i < 100; ++i) same += c1c.uniform() == c2.uniform();
    EXPECT_LT(same, 3);
}

TEST(RngStream, ForkDoesNotAdvanceParent) {
    RngStream a(33), b(33);
    (void)a.fork(5);
    (void)a.fork(6);
    EXPECT_EQ(a.uniform(), b.uniform());
}

TEST(RngStream, BernoulliRate) {
    RngStream r(25);
    int hits = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) hits += r.bernoulli(0.25);
    EXPECT_NEAR(hits / static_cast<double>(n), 0.25, 0.02);
}
