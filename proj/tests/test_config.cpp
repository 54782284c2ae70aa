#include <gtest/gtest.h>

#include "stash/config.hpp"
#include "test_util.hpp"

using namespace stash;
using testutil::error_of;

TEST(Config, DefaultsRoundTripThroughToml) {
    const Config d;
    const Config parsed = parse_config(default_config_toml());
    EXPECT_EQ(parsed.seed, d.seed);
    EXPECT_EQ(parsed.alpha, d.alpha);
    EXPECT_EQ(parsed.pipeline.resample_hz, 20.0);
    EXPECT_EQ(parsed.hmm.emit_moving, 0.98);
    EXPECT_EQ(parsed.scoring.mismatch, -2);
    EXPECT_EQ(parsed.max_attempts, 10);
}

TEST(Config, OverridesSelectedKeys) {
    const auto c = parse_config("seed = 7\nalpha = 0.3\n[detector]\nsigma1_deg = 4.0\nstability_gate = false\n"
                                "[scoring]\ngap = -2\n");
    EXPECT_EQ(c.seed, 7u);
    EXPECT_DOUBLE_EQ(c.alpha, 0.3);
    EXPECT_DOUBLE_EQ(c.pipeline.turns.sigma1_deg, 4.0);
    EXPECT_FALSE(c.pipeline.turns.stability_gate);
    EXPECT_EQ(c.scoring.gap, -2);
    EXPECT_DOUBLE_EQ(c.pipeline.turns.sigma2_deg, 1.0);
}

TEST(Config, RejectsUnknownKeysBadTypesAndBadValues) {
    EXPECT_EQ(error_of([] { parse_config("nonsense = 1\n"); }), ErrorCode::ConfigError);
    EXPECT_EQ(error_of([] { parse_config("[hmm]\nemit_moving = \"high\"\n"); }), ErrorCode::ConfigError);
    EXPECT_EQ(error_of([] { parse_config("[detector]\nsigma2_deg = 5.0\n"); }), ErrorCode::ConfigError);
    EXPECT_EQ(error_of([] { parse_config("alpha = 0.95\n"); }), ErrorCode::ConfigError);
    EXPECT_EQ(error_of([] { parse_config("[[broken\n"); }), ErrorCode::ConfigError);
    EXPECT_EQ(error_of([] { load_config("/nonexistent.toml"); }), ErrorCode::IoError);
}
