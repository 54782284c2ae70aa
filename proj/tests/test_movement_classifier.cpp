#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "stash/movement_classifier.hpp"
#include "stash/pipeline.hpp"
#include "test_util.hpp"

using namespace stash;
using testutil::error_of;

namespace {

constexpr double kTol = 1e-12;

std::vector<Motion> from_bits(std::uint32_t bits, std::size_t n) {
    std::vector<Motion> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<Motion>((bits >> i) & 1u);
    return out;
}

} // namespace

TEST(Stats, BasicMoments) {
    const std::vector<double> x = {1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(stats::mean(x), 2.5);
    EXPECT_DOUBLE_EQ(stats::variance(x), 1.25);
    EXPECT_DOUBLE_EQ(stats::stddev(x), std::sqrt(1.25));
    EXPECT_DOUBLE_EQ(stats::percentile(x, 50), 2.5);
    EXPECT_DOUBLE_EQ(stats::percentile(x, 0), 1.0);
    EXPECT_DOUBLE_EQ(stats::percentile(x, 100), 4.0);
    EXPECT_DOUBLE_EQ(stats::peak_to_peak(x), 3.0);
    EXPECT_EQ(stats::diff(x), (std::vector<double>{1, 1, 1}));
}

TEST(Features, NamesAreKnownAndDefaultsAreTen) {
    const auto& all = all_feature_names();
    const auto& def = default_feature_names();
    EXPECT_EQ(def.size(), 10u);
    for (const auto& n : def) EXPECT_NE(std::find(all.begin(), all.end(), n), all.end()) << n;
    EXPECT_EQ(def[0], "ACC_3_std_diff_long");
}

TEST(Features, OneVectorPerSecondAndErrors) {
    SensorStream s;
    s.rate_hz = 20.0;
    for (int i = 0; i < 100; ++i) s.samples.push_back({i * 50'000'000LL, {0, 0, 9.81 + 0.1 * std::sin(i)}, {}});
    const auto g = estimate_gravity(s);
    const auto f = extract_features(s, g);
    ASSERT_EQ(f.size(), 5u);
    for (const auto& v : f) {
        ASSERT_EQ(v.size(), 10u);
        for (double x : v) EXPECT_TRUE(std::isfinite(x));
    }
    GravityEstimate short_g = g;
    short_g.gravity.pop_back();
    short_g.stable.pop_back();
    EXPECT_EQ(error_of([&] { extract_features(s, short_g); }), ErrorCode::LengthMismatch);
    SensorStream tiny = s;
    tiny.samples.resize(10);
    EXPECT_EQ(error_of([&] { extract_features(tiny, estimate_gravity(tiny)); }), ErrorCode::InsufficientData);
}

TEST(Viterbi, MatchesExhaustiveSearch) {
    const HmmParams p;
    for (std::size_t T = 1; T <= 10; ++T) {
        for (std::uint32_t bits = 0; bits < (1u << T); bits += (T > 8 ? 7 : 1)) {
            const auto obs = from_bits(bits, T);
            const auto path = viterbi_smooth(obs, p);
            const auto brute = oracle::viterbi_brute(obs, p);
            ASSERT_EQ(path.size(), T);
            EXPECT_NEAR(oracle::path_log_prob(path, obs, p), brute.best, kTol);
        }
    }
}

TEST(Viterbi, SmoothsIsolatedFlips) {
    const auto obs = from_bits(0b1111111011111111u, 16);
    for (Motion m : viterbi_smooth(obs)) EXPECT_EQ(m, Motion::Moving);
    EXPECT_TRUE(viterbi_smooth(std::vector<Motion>{}).empty());
}

TEST(Viterbi, RejectsInvalidParameters) {
    HmmParams p;
    p.emit_moving = 1.5;
    EXPECT_EQ(error_of([&] { p.validate(); }), ErrorCode::InvalidArgument);
}

TEST(Aggregate, MajorityPerBlockWithTiesToMoving) {
    const auto labels = from_bits(0b11'00011'11100u, 12);
    // Blocks: 00111 -> M, 11000 -> S, 11 -> tie -> M.
    EXPECT_EQ(aggregate_blocks(labels), (std::vector<Motion>{Motion::Moving, Motion::Still, Motion::Moving}));
    std::vector<MovementLabel> stamped;
    for (std::size_t i = 0; i < labels.size(); ++i)
        stamped.push_back({static_cast<Timestamp>(i) * kNanosPerSecond, labels[i]});
    const auto prims = aggregate_5s(stamped);
    ASSERT_EQ(prims.size(), 3u);
    EXPECT_EQ(prims[1].t, 5 * kNanosPerSecond);
    EXPECT_EQ(prims[1].symbol, Symbol::Still);
}

TEST(LogReg, LearnsSeparableDataAndRoundTrips) {
    Rng rng(11);
    std::vector<FeatureVector> x;
    std::vector<Motion> y;
    for (int i = 0; i < 200; ++i) {
        const bool moving = i % 2 == 0;
        x.push_back({(moving ? 2.0 : -2.0) + rng.normal(0, 0.5), rng.normal()});
        y.push_back(moving ? Motion::Moving : Motion::Still);
    }
    const std::vector<std::string> names = {all_feature_names()[0], all_feature_names()[1]};
    const auto result = train_logreg(x, y, names);
    EXPECT_GT(result.cv.accuracy, 0.97);
    EXPECT_EQ(result.cv.folds, 5);
    const auto pred = predict_sequence(result.model, x);
    int correct = 0;
    for (std::size_t i = 0; i < y.size(); ++i) correct += pred[i] == y[i];
    EXPECT_GT(correct, 195);

    MovementClassifier clf;
    clf.model = result.model;
    clf.features.names = names;
    const auto back = classifier_from_json(classifier_to_json(clf));
    EXPECT_EQ(back.model.weights, clf.model.weights);
    EXPECT_EQ(back.model.bias, clf.model.bias);
    EXPECT_EQ(back.features.names, clf.features.names);
}

TEST(LogReg, Errors) {
    const std::vector<FeatureVector> x = {{1.0}, {2.0}};
    EXPECT_EQ(error_of([&] { train_logreg(x, {Motion::Still, Motion::Still}, {"a"}); }),
              ErrorCode::DegenerateLabels);
    EXPECT_EQ(error_of([] { LogRegModel{}.probability({1.0}); }), ErrorCode::UntrainedModel);
    EXPECT_EQ(error_of([] { classifier_from_json("{"); }), ErrorCode::CorruptFile);
    EXPECT_EQ(error_of([] { classifier_from_json(R"({"format":"stash-movement-model","version":99})"); }),
              ErrorCode::VersionMismatch);
}

TEST(MovementClassifier, SyntheticWalkLabelsMostlyCorrect) {
    const auto clf = default_classifier();
    const std::vector<RouteEvent> events = {{RouteEvent::Kind::Straight, 6, 0},
                                            {RouteEvent::Kind::Stop, 4, 0},
                                            {RouteEvent::Kind::Straight, 6, 0}};
    const auto rec = synthesize_recording(events, ImuSynthConfig{}, 123);
    const auto res = extract_primitives(rec.stream, clf);
    ASSERT_FALSE(res.labels.empty());
    std::size_t agree = 0, n = std::min(res.labels.size(), rec.second_labels.size());
    for (std::size_t i = 0; i < n; ++i) agree += res.labels[i].label == rec.second_labels[i];
    EXPECT_GT(static_cast<double>(agree) / n, 0.9);
}
