#include <gtest/gtest.h>

#include <set>

#include "stash/common.hpp"
#include "stash/error.hpp"

using namespace stash;

TEST(Time, SecondsRoundTripToNanoseconds) {
    EXPECT_EQ(seconds_to_ns(1.0), kNanosPerSecond);
    EXPECT_EQ(seconds_to_ns(0.05), 50'000'000);
    EXPECT_EQ(seconds_to_ns(-0.5), -500'000'000);
    EXPECT_DOUBLE_EQ(ns_to_seconds(2'500'000'000), 2.5);
}

TEST(Vec3, Arithmetic) {
    const Vec3 a{1, 2, 3}, b{4, 5, 6};
    EXPECT_EQ(a + b, (Vec3{5, 7, 9}));
    EXPECT_EQ(b - a, (Vec3{3, 3, 3}));
    EXPECT_EQ(2.0 * a, (Vec3{2, 4, 6}));
    EXPECT_DOUBLE_EQ(a.dot(b), 32.0);
    EXPECT_DOUBLE_EQ((Vec3{3, 4, 0}).norm(), 5.0);
    EXPECT_FALSE((Vec3{0, std::nan(""), 0}).finite());
}

TEST(Rng, SameSeedSameStream) {
    Rng a(99), b(99);
    for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next(), b.next());
}

TEST(Rng, UniformStaysInUnitInterval) {
    Rng rng(1);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(Rng, BelowCoversRangeWithoutOverflow) {
    Rng rng(5);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        const auto v = rng.below(7);
        ASSERT_LT(v, 7u);
        seen.insert(v);
    }
    EXPECT_EQ(seen.size(), 7u);
}

TEST(Rng, NormalMomentsAreClose) {
    Rng rng(3);
    constexpr int n = 200000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.01);
    EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Rng, SplitStreamsDiffer) {
    const Rng root(42);
    Rng a = root.split(1), b = root.split(2), a2 = root.split(1);
    EXPECT_NE(a.next(), b.next());
    Rng a3 = root.split(1);
    a2.next();
    EXPECT_EQ(a2.next(), (a3.next(), a3.next()));
}

TEST(Seeds, MixAndHashAreStable) {
    static_assert(fnv1a("") == 0xcbf29ce484222325ULL);
    static_assert(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    EXPECT_NE(mix_seed(1, 0), mix_seed(1, 1));
    EXPECT_NE(mix_seed(1, 0), mix_seed(2, 0));
}

TEST(Error, CarriesCodeAndLine) {
    try {
        fail(ErrorCode::ParseError, "bad", 12);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ParseError);
        EXPECT_EQ(e.line(), 12u);
        EXPECT_EQ(to_string(e.code()), "ParseError");
        return;
    }
    FAIL() << "fail() returned";
}
