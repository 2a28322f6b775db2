#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "copath/rng.hpp"

using namespace copath;

TEST(Rng, DerivedSeedsAreStableAndDistinct) {
    EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
    EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
    EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
}

TEST(Rng, HashStringIsFnv1a) {
    // FNV-1a 64 reference values.
    EXPECT_EQ(hash_string(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(hash_string("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Rng, UniformIndexStaysInRange) {
    Engine rng(3);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 7000; ++i) ++hits[uniform_index(rng, 7)];
    for (int h : hits) EXPECT_GT(h, 800);
}

TEST(Rng, Uniform01HalfOpen) {
    Engine rng(9);
    for (int i = 0; i < 10000; ++i) {
        const double u = uniform01(rng);
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(Rng, ShuffleIsPermutation) {
    Engine rng(5);
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    auto w = v;
    shuffle(w, rng);
    EXPECT_NE(v, w);
    std::sort(w.begin(), w.end());
    EXPECT_EQ(v, w);
}

TEST(Rng, NormalMoments) {
    Engine rng(11);
    double s = 0, s2 = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double x = standard_normal(rng);
        s += x, s2 += x * x;
    }
    EXPECT_NEAR(s / n, 0.0, 0.03);
    EXPECT_NEAR(s2 / n, 1.0, 0.05);
}
