#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "stash/path_repository.hpp"
#include "stash/trajectory.hpp"

namespace stash {

// ---------------------------------------------------------------------------
// Wire format: u16 big-endian length of (type + payload), type byte, payload.

enum class FrameType : std::uint8_t { Challenge = 0x01, Response = 0x02, Accept = 0x03, Reject = 0x04 };

std::string_view to_string(FrameType type);

using Bytes = std::vector<std::uint8_t>;

struct Frame {
    FrameType type = FrameType::Challenge;
    Bytes payload;

    friend bool operator==(const Frame&, const Frame&) = default;
};

inline constexpr std::size_t kMaxFramePayload = 0xFFFF - 1;

Bytes encode_frame(const Frame& frame);
/// Decodes exactly one complete frame. Throws ParseError on a short buffer, a
/// length mismatch or an unknown type.
Frame decode_frame(std::span<const std::uint8_t> bytes);

inline constexpr std::size_t kNonceSize = 16;
using Nonce = std::array<std::uint8_t, kNonceSize>;
using Key = std::array<std::uint8_t, 32>;
using Mac = std::array<std::uint8_t, 32>;

struct Challenge {
    Nonce nonce{};
    std::string verifier_id;

    Frame to_frame() const;
    static Challenge from_frame(const Frame& frame);
};

/// HMAC-SHA256 over nonce || verifier_id.
Mac compute_response(const Key& key, const Nonce& nonce, const std::string& verifier_id);
/// Constant-time comparison against the expected MAC.
bool verify_response(const Key& key, const Nonce& nonce, const std::string& verifier_id,
                     std::span<const std::uint8_t> mac);

// ---------------------------------------------------------------------------
// Keys: one `<verifier_id> <64 hex chars>` per line, `#` starts a comment.

class KeyStore {
public:
    void set(const std::string& verifier_id, const Key& key) { keys_[verifier_id] = key; }
    /// Throws InvalidArgument when no key is provisioned for the verifier.
    const Key& get(const std::string& verifier_id) const;
    bool contains(const std::string& verifier_id) const { return keys_.count(verifier_id) != 0; }
    const std::map<std::string, Key>& keys() const { return keys_; }

    static KeyStore parse(const std::string& text);
    static KeyStore load(const std::filesystem::path& path);
    std::string to_text() const;
    void save(const std::filesystem::path& path) const;

private:
    std::map<std::string, Key> keys_;
};

Key derive_key(std::uint64_t seed);
std::string to_hex(std::span<const std::uint8_t> bytes);

// ---------------------------------------------------------------------------
// Channels

/// One end of a bidirectional frame channel. Safe to use from one reader and
/// one writer thread; `close` may be called from any thread.
class Endpoint {
public:
    virtual ~Endpoint() = default;
    /// Sends one encoded frame. Throws ChannelClosed after either side closed.
    virtual void send_bytes(const Bytes& frame) = 0;
    /// Next encoded frame, or nullopt once the channel is closed and drained.
    virtual std::optional<Bytes> receive_bytes() = 0;
    virtual void close() = 0;

    void send(const Frame& frame) { send_bytes(encode_frame(frame)); }
    std::optional<Frame> receive();
};

struct EndpointPair {
    std::unique_ptr<Endpoint> a;
    std::unique_ptr<Endpoint> b;
};

enum class Transport { InProcess, TcpLoopback };

EndpointPair make_inproc_pair();
/// Connected sockets over 127.0.0.1. Throws IoError on socket failures.
EndpointPair make_tcp_pair();
EndpointPair make_pair(Transport transport);

/// Man-in-the-middle that forwards frames verbatim in both directions after an
/// added latency, recording everything it sees. Stops when either side closes
/// and then closes the other side.
class Relay {
public:
    enum class Direction { AToB, BToA };
    struct Record {
        Direction direction;
        Bytes frame;
    };

    Relay(Endpoint& a, Endpoint& b, std::chrono::milliseconds latency = std::chrono::milliseconds(0));
    ~Relay();
    Relay(const Relay&) = delete;
    Relay& operator=(const Relay&) = delete;

    void join();
    std::vector<Record> transcript() const;
    std::size_t forwarded() const;

private:
    void pump(Endpoint& from, Endpoint& to, Direction direction);

    Endpoint& a_;
    Endpoint& b_;
    std::chrono::milliseconds latency_;
    mutable std::mutex mutex_;
    std::vector<Record> records_;
    std::thread a_to_b_;
    std::thread b_to_a_;
};

std::unique_ptr<Relay> relay_forward(Endpoint& a, Endpoint& b,
                                     std::chrono::milliseconds latency = std::chrono::milliseconds(0));

// ---------------------------------------------------------------------------
// Proximity gate

/// Primitives observed up to (and including) the given time.
using LiveSource = std::function<PrimitiveSequence(Timestamp now)>;
LiveSource static_source(PrimitiveSequence observed);

struct GateDecision {
    bool pass = false;
    int attempts_used = 0;
    /// Best score seen over all attempts and paths.
    std::optional<int> best_score;
    /// Path that passed, or the best-scoring one on failure.
    std::optional<std::size_t> path_index;
};

inline constexpr int kDefaultMaxAttempts = 10;

/// Up to `max_attempts` comparisons one second apart starting at `now`. Each
/// trims the live sequence to the path's length and scores it against the
/// medoid; the first score above the path's threshold passes.
/// Throws NoReferencePath if `paths` is empty.
GateDecision verify_proximity(std::span<const ReferencePath> paths, const LiveSource& live, Timestamp now,
                              int max_attempts = kDefaultMaxAttempts, const ScoringScheme& scheme = {});

// ---------------------------------------------------------------------------
// Sessions

struct ProverConfig {
    KeyStore keys;
    Repository* repository = nullptr;
    LiveSource live;
    Timestamp now = 0;
    bool gate_enabled = true;
    /// Scripted answer to the explicit confirmation prompt after a failed gate.
    bool user_confirms = false;
    int max_attempts = kDefaultMaxAttempts;
    /// Length used when the fallback enrolls the first path for a verifier.
    double enroll_length_min = 2.0;
    UpdateOptions update;
};

struct VerifierConfig {
    std::string verifier_id;
    Key key{};
    std::uint64_t nonce_seed = 0;
};

struct SessionOutcome {
    enum class Result { Accepted, FallbackToExplicit, Rejected };
    Result result = Result::Rejected;
    int attempts_used = 0;
    std::optional<int> gate_score;
    bool gate_passed = false;
    /// The verifier accepted a valid response.
    bool verifier_accepted = false;
    bool response_sent = false;
    std::vector<std::string> transcript;
};

std::string_view to_string(SessionOutcome::Result result);

/// Runs prover and verifier as concurrent actors over the given endpoints and
/// joins them. Throws ChannelClosed when the channel dies unexpectedly and
/// MacMismatch when the verifier rejects the response.
SessionOutcome run_session(ProverConfig& prover, const VerifierConfig& verifier, Endpoint& prover_end,
                           Endpoint& verifier_end);

enum class Scenario { Benign, Relay, RelayNoGate };

std::string_view to_string(Scenario scenario);
std::optional<Scenario> scenario_from_string(std::string_view name);
std::optional<Transport> transport_from_string(std::string_view name);

struct ScenarioSetup {
    std::string verifier_id = "door";
    Key key{};
    Repository repository;
    /// What the prover has walked in the benign case.
    PrimitiveSequence approach;
    Timestamp now = 0;
};

/// A reference path enrolled from several noisy walks of one synthetic route,
/// plus a fresh walk of the same route as the benign approach.
ScenarioSetup make_demo_setup(std::uint64_t seed, int enrolled_instances = 4, double length_min = 2.0);

struct ScenarioResult {
    SessionOutcome outcome;
    /// Frames observed by the relay (empty without one).
    std::vector<Relay::Record> relayed;
};

struct ScenarioOptions {
    Transport transport = Transport::InProcess;
    std::chrono::milliseconds relay_latency{0};
    std::uint64_t session_seed = 0;
};

/// Benign: co-located prover that walked the route and confirms if asked.
/// Relay / RelayNoGate: the prover sits still far away and declines the prompt;
/// an attacker relays frames between it and the verifier.
ScenarioResult run_scenario(Scenario scenario, ScenarioSetup& setup, const ScenarioOptions& options = {});

} // namespace stash
