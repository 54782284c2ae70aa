#include <gtest/gtest.h>

#include <cmath>

#include "stash/synthetic_imu.hpp"
#include "stash/turn_detector.hpp"
#include "test_util.hpp"

using namespace stash;
using testutil::error_of;

namespace {

constexpr double kAngleTolDeg = 3.0;

std::vector<TurnEvent> run(const YawRateStream& yaw, const TurnDetectorConfig& cfg = {}) {
    return detect_turns(integrate_heading(condition_gyro(yaw, cfg), cfg), cfg);
}

} // namespace

TEST(RollingStd, MatchesDirectComputation) {
    std::vector<Timestamp> t;
    std::vector<double> v;
    for (int i = 0; i < 20; ++i) {
        t.push_back(i * 100);
        v.push_back(std::sin(i));
    }
    const auto sd = rolling_std(t, v, 350); // windows hold up to 4 samples
    for (int i = 0; i < 20; ++i) {
        const int start = std::max(0, i - 3);
        double m = 0;
        for (int j = start; j <= i; ++j) m += v[j];
        m /= (i - start + 1);
        double var = 0;
        for (int j = start; j <= i; ++j) var += (v[j] - m) * (v[j] - m);
        EXPECT_NEAR(sd[i], std::sqrt(var / (i - start + 1)), 1e-12);
    }
}

TEST(DriftAttenuation, UnityAboveFloorAndInverseEAtZero) {
    EXPECT_DOUBLE_EQ(drift_attenuation(10.0, 8.6), 1.0);
    EXPECT_DOUBLE_EQ(drift_attenuation(-8.6, 8.6), 1.0);
    EXPECT_NEAR(drift_attenuation(0.0, 8.6), std::exp(-1.0), 1e-15);
    EXPECT_LT(drift_attenuation(2.0, 8.6), drift_attenuation(4.0, 8.6));
}

TEST(ProjectToGround, RightTurnIsPositive) {
    SensorStream s;
    GravityEstimate g;
    for (int i = 0; i < 3; ++i) {
        s.samples.push_back({i * 50'000'000LL, {0, 0, 9.81}, {0, 0, -deg_to_rad(30.0)}});
        g.gravity.push_back({0, 0, 9.81});
        g.stable.push_back(1);
    }
    const auto yaw = project_to_ground(s, g);
    ASSERT_EQ(yaw.size(), 3u);
    EXPECT_NEAR(yaw.rate_dps[0], 30.0, 1e-9);
    g.gravity.pop_back();
    g.stable.pop_back();
    EXPECT_EQ(error_of([&] { project_to_ground(s, g); }), ErrorCode::LengthMismatch);
}

TEST(IntegrateHeading, RectangleRuleFromZero) {
    YawRateStream yaw;
    for (int i = 0; i < 5; ++i) {
        yaw.t.push_back(i * 500'000'000LL);
        yaw.rate_dps.push_back(10.0);
        yaw.reliable.push_back(i == 2 ? 0 : 1);
    }
    TurnDetectorConfig cfg;
    const auto h = integrate_heading(yaw, cfg);
    EXPECT_DOUBLE_EQ(h.alpha_deg[0], 0.0);
    EXPECT_DOUBLE_EQ(h.alpha_deg[4], 15.0); // sample 2 skipped by the stability gate
    cfg.stability_gate = false;
    EXPECT_DOUBLE_EQ(integrate_heading(yaw, cfg).alpha_deg[4], 20.0);
    EXPECT_EQ(error_of([] { integrate_heading(YawRateStream{}); }), ErrorCode::EmptyStream);
}

TEST(ConditionGyro, FlattensStationaryNoise) {
    const std::vector<double> none;
    const auto yaw = synthesize_yaw_profile(none, 20.0, 0.05, 2.0, 10.0, 1);
    const auto out = condition_gyro(yaw, {});
    for (double r : out.rate_dps) EXPECT_EQ(r, 0.0);
    EXPECT_TRUE(run(yaw).empty());
}

TEST(DetectTurns, RecoversAnglesAndCounts) {
    const std::vector<double> angles = {90.0, -47.0, 15.0};
    const auto yaw = synthesize_yaw_profile(angles, 20.0, 0.5, 2.0, 10.0, 3);
    const auto turns = run(yaw);
    ASSERT_EQ(turns.size(), 3u);
    const int counts[] = {6, 3, 1};
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(turns[i].angle_deg, angles[i], kAngleTolDeg);
        EXPECT_EQ(turns[i].count, counts[i]);
        EXPECT_LT(turns[i].t_begin, turns[i].t_end);
    }
    EXPECT_EQ(turns[0].direction(), TurnDirection::Right);
    EXPECT_EQ(turns[1].direction(), TurnDirection::Left);
    EXPECT_EQ(turns[1].symbols(), "LLL");
}

TEST(DetectTurns, TurnsAreOrderedAndDisjoint) {
    const std::vector<double> angles = {30, -30, 45, 180, -90, 15, -15};
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto turns = run(synthesize_yaw_profile(angles, 20.0, 0.5, 2.0, 10.0, seed));
        for (std::size_t i = 1; i < turns.size(); ++i) EXPECT_LE(turns[i - 1].t_end, turns[i].t_begin);
    }
}

TEST(DetectTurns, SubGranularityWiggleYieldsNothing) {
    const std::vector<double> angles = {5.0};
    EXPECT_TRUE(run(synthesize_yaw_profile(angles, 20.0, 0.2, 2.0, 10.0, 1)).empty());
}

TEST(TurnDetectorConfig, Validation) {
    TurnDetectorConfig cfg;
    cfg.sigma2_deg = cfg.sigma1_deg;
    EXPECT_EQ(error_of([&] { cfg.validate(); }), ErrorCode::InvalidArgument);
    cfg = {};
    cfg.granularity_deg = 0;
    EXPECT_EQ(error_of([&] { cfg.validate(); }), ErrorCode::InvalidArgument);
}

TEST(TurnEvents, JsonlRoundTrip) {
    std::vector<TurnEvent> turns(2);
    turns[0] = {1'000, 2'000, -44.5, 3};
    turns[1] = {5'000, 9'000, 91.25, 6};
    const auto text = turns_to_jsonl(turns);
    EXPECT_NE(text.find("\"direction\":\"L\""), std::string::npos);
    const auto back = parse_turns_jsonl(text);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].t_end, 9'000);
    EXPECT_EQ(back[1].angle_deg, 91.25);
    EXPECT_EQ(back[0].count, 3);
}

TEST(TurnEvents, JsonlErrorsCarryLine) {
    try {
        parse_turns_jsonl("{\"t_begin_ns\":0,\"t_end_ns\":1,\"angle_deg\":20,\"count\":1}\n{\"t_begin_ns\":5}\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ParseError);
        EXPECT_EQ(e.line(), 2u);
    }
    EXPECT_EQ(error_of([] { parse_turns_jsonl("{\"t_begin_ns\":9,\"t_end_ns\":1,\"angle_deg\":20,\"count\":1}"); }),
              ErrorCode::ParseError);
}
