#include <gtest/gtest.h>

#include <thread>

#include "stash/auth_protocol.hpp"
#include "test_util.hpp"

using namespace stash;
using namespace std::chrono_literals;
using testutil::error_of;

namespace {

Key counting_key() {
    Key k{};
    for (std::size_t i = 0; i < k.size(); ++i) k[i] = static_cast<std::uint8_t>(i);
    return k;
}

ReferencePath path_from(std::string_view text, double threshold) {
    ReferencePath p;
    p.verifier_id = "door";
    p.instances = {sequence_from_text(text, 0, 5 * kNanosPerSecond)};
    p.threshold = ThresholdState::initial(threshold);
    return p;
}

} // namespace

TEST(Frame, EncodeLayout) {
    const Frame f{FrameType::Response, {0xde, 0xad}};
    const Bytes b = encode_frame(f);
    EXPECT_EQ(b, (Bytes{0x00, 0x03, 0x02, 0xde, 0xad}));
    EXPECT_EQ(decode_frame(b), f);
}

TEST(Frame, DecodeErrors) {
    EXPECT_EQ(error_of([] { decode_frame(Bytes{0x00}); }), ErrorCode::ParseError);
    EXPECT_EQ(error_of([] { decode_frame(Bytes{0x00, 0x05, 0x01}); }), ErrorCode::ParseError);
    EXPECT_EQ(error_of([] { decode_frame(Bytes{0x00, 0x01, 0x09}); }), ErrorCode::ParseError);
}

TEST(Challenge, FrameRoundTrip) {
    Challenge c;
    c.nonce.fill(0x5a);
    c.verifier_id = "lab-door";
    const auto back = Challenge::from_frame(c.to_frame());
    EXPECT_EQ(back.nonce, c.nonce);
    EXPECT_EQ(back.verifier_id, c.verifier_id);
    EXPECT_EQ(error_of([] { Challenge::from_frame(Frame{FrameType::Challenge, Bytes(3)}); }), ErrorCode::ParseError);
}

TEST(Mac, KnownAnswerAndVerification) {
    Nonce n;
    n.fill(0xaa);
    const Mac mac = compute_response(counting_key(), n, "door");
    EXPECT_EQ(to_hex(mac), "6c5cfc27718bc55b72ca08b28cbb4dedc9b6791fe36f259c5f0425cafffb04da");
    EXPECT_TRUE(verify_response(counting_key(), n, "door", mac));
    Mac bad = mac;
    bad[31] ^= 1;
    EXPECT_FALSE(verify_response(counting_key(), n, "door", bad));
    EXPECT_FALSE(verify_response(counting_key(), n, "door2", mac));
    EXPECT_FALSE(verify_response(counting_key(), n, "door", std::span<const std::uint8_t>(mac).first(16)));
}

TEST(KeyStore, ParseSaveLoad) {
    testutil::TempDir dir("keys");
    KeyStore ks;
    ks.set("door", counting_key());
    ks.set("lab", derive_key(3));
    const auto parsed = KeyStore::parse("# comment\n" + ks.to_text());
    EXPECT_EQ(parsed.keys(), ks.keys());
    ks.save(dir / "keys.txt");
    EXPECT_EQ(KeyStore::load(dir / "keys.txt").keys(), ks.keys());
    EXPECT_EQ(error_of([&] { ks.get("nobody"); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(error_of([] { KeyStore::parse("door abc\n"); }), ErrorCode::ParseError);
    EXPECT_EQ(derive_key(3), derive_key(3));
    EXPECT_NE(derive_key(3), derive_key(4));
}

class Channels : public ::testing::TestWithParam<Transport> {};

TEST_P(Channels, DeliversInOrderAndSignalsClose) {
    auto pair = make_pair(GetParam());
    for (std::uint8_t i = 0; i < 20; ++i) pair.a->send(Frame{FrameType::Response, Bytes(i, i)});
    for (std::uint8_t i = 0; i < 20; ++i) {
        const auto f = pair.b->receive();
        ASSERT_TRUE(f.has_value());
        EXPECT_EQ(f->payload, Bytes(i, i));
    }
    pair.b->send(Frame{FrameType::Accept, {}});
    EXPECT_EQ(pair.a->receive()->type, FrameType::Accept);
    pair.a->close();
    EXPECT_FALSE(pair.b->receive().has_value());
    EXPECT_EQ(error_of([&] { pair.a->send(Frame{}); }), ErrorCode::ChannelClosed);
}

TEST_P(Channels, RelayForwardsAndRecords) {
    auto left = make_pair(GetParam());
    auto right = make_pair(GetParam());
    {
        Relay relay(*left.b, *right.a, 5ms);
        left.a->send(Frame{FrameType::Challenge, {1, 2}});
        const auto got = right.b->receive();
        ASSERT_TRUE(got.has_value());
        EXPECT_EQ(got->payload, (Bytes{1, 2}));
        right.b->send(Frame{FrameType::Response, {3}});
        EXPECT_EQ(left.a->receive()->payload, (Bytes{3}));
        left.a->close();
        relay.join();
        EXPECT_EQ(relay.forwarded(), 2u);
        const auto t = relay.transcript();
        ASSERT_EQ(t.size(), 2u);
        EXPECT_EQ(t[0].direction, Relay::Direction::AToB);
    }
    EXPECT_FALSE(right.b->receive().has_value());
}

INSTANTIATE_TEST_SUITE_P(Transports, Channels, ::testing::Values(Transport::InProcess, Transport::TcpLoopback),
                         [](const auto& info) { return info.param == Transport::InProcess ? "Inproc" : "Tcp"; });

TEST(Gate, PassesOnStrictlyGreaterScore) {
    const std::vector<ReferencePath> paths = {path_from("MMMMLLMMMM", 9.0)};
    const auto live = sequence_from_text("MMMMLLMMMM", 0, 5 * kNanosPerSecond);
    const auto d = verify_proximity(paths, static_source(live), live.primitives().back().t);
    EXPECT_TRUE(d.pass);
    EXPECT_EQ(d.attempts_used, 1);
    EXPECT_EQ(d.best_score, 10);

    const std::vector<ReferencePath> strict = {path_from("MMMMLLMMMM", 10.0)};
    const auto fail = verify_proximity(strict, static_source(live), live.primitives().back().t, 3);
    EXPECT_FALSE(fail.pass);
    EXPECT_EQ(fail.attempts_used, 3);
}

TEST(Gate, LaterAttemptsSeeMoreOfTheWalk) {
    // The final turn arrives 2 s after the first attempt.
    const std::vector<ReferencePath> paths = {path_from("MMMR", 3.0)};
    const PrimitiveSequence live({{Symbol::Move, 0},
                                  {Symbol::Move, 5 * kNanosPerSecond},
                                  {Symbol::Move, 10 * kNanosPerSecond},
                                  {Symbol::Right, 12 * kNanosPerSecond}});
    const auto d = verify_proximity(paths, static_source(live), 10 * kNanosPerSecond);
    EXPECT_TRUE(d.pass);
    EXPECT_EQ(d.attempts_used, 3);
}

TEST(Gate, EmptyRepository) {
    EXPECT_EQ(error_of([] { verify_proximity({}, static_source({}), 0); }), ErrorCode::NoReferencePath);
}

TEST(Scenario, Names) {
    EXPECT_EQ(scenario_from_string("relay-nogate"), Scenario::RelayNoGate);
    EXPECT_EQ(to_string(Scenario::Benign), "benign");
    EXPECT_EQ(transport_from_string("tcp"), Transport::TcpLoopback);
    EXPECT_FALSE(scenario_from_string("bogus").has_value());
}

TEST(Scenario, BenignAccepted) {
    auto setup = make_demo_setup(42);
    const auto r = run_scenario(Scenario::Benign, setup);
    EXPECT_EQ(r.outcome.result, SessionOutcome::Result::Accepted);
    EXPECT_TRUE(r.outcome.gate_passed);
    EXPECT_TRUE(r.outcome.verifier_accepted);
}

TEST(Scenario, RelayBlockedByGateButNotWithoutIt) {
    for (Transport transport : {Transport::InProcess, Transport::TcpLoopback}) {
        auto setup = make_demo_setup(42);
        ScenarioOptions opts;
        opts.transport = transport;
        opts.relay_latency = 1ms;
        const auto blocked = run_scenario(Scenario::Relay, setup, opts);
        EXPECT_EQ(blocked.outcome.result, SessionOutcome::Result::Rejected);
        EXPECT_FALSE(blocked.outcome.response_sent);
        EXPECT_FALSE(blocked.outcome.verifier_accepted);
        EXPECT_FALSE(blocked.relayed.empty());

        const auto open = run_scenario(Scenario::RelayNoGate, setup, opts);
        EXPECT_TRUE(open.outcome.verifier_accepted);
        EXPECT_TRUE(open.outcome.response_sent);
    }
}

TEST(Session, ConfirmedFallbackEnrollsNewVerifier) {
    auto setup = make_demo_setup(5);
    Repository empty;
    ProverConfig prover;
    prover.keys.set("door", setup.key);
    prover.repository = &empty;
    prover.live = static_source(setup.approach);
    prover.now = setup.now;
    prover.user_confirms = true;
    VerifierConfig verifier{"door", setup.key, 1};
    auto pair = make_inproc_pair();
    const auto out = run_session(prover, verifier, *pair.a, *pair.b);
    EXPECT_EQ(out.result, SessionOutcome::Result::FallbackToExplicit);
    EXPECT_TRUE(out.verifier_accepted);
    EXPECT_EQ(empty.paths_for("door").size(), 1u);
}

TEST(Session, WrongKeyIsMacMismatch) {
    auto setup = make_demo_setup(5);
    ProverConfig prover;
    prover.keys.set("door", derive_key(999));
    prover.repository = &setup.repository;
    prover.live = static_source(setup.approach);
    prover.now = setup.now;
    VerifierConfig verifier{"door", setup.key, 1};
    auto pair = make_inproc_pair();
    EXPECT_EQ(error_of([&] { run_session(prover, verifier, *pair.a, *pair.b); }), ErrorCode::MacMismatch);
}
