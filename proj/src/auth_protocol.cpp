#include "stash/auth_protocol.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <exception>
#include <fstream>
#include <sstream>

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include "stash/error.hpp"
#include "text_util.hpp"

namespace stash {

std::string_view to_string(FrameType type) {
    switch (type) {
    case FrameType::Challenge: return "CHALLENGE";
    case FrameType::Response: return "RESPONSE";
    case FrameType::Accept: return "ACCEPT";
    case FrameType::Reject: return "REJECT";
    }
    return "?";
}

Bytes encode_frame(const Frame& frame) {
    if (frame.payload.size() > kMaxFramePayload) fail(ErrorCode::InvalidArgument, "frame payload too large");
    const auto length = static_cast<std::uint16_t>(frame.payload.size() + 1);
    Bytes out;
    out.reserve(frame.payload.size() + 3);
    out.push_back(static_cast<std::uint8_t>(length >> 8));
    out.push_back(static_cast<std::uint8_t>(length & 0xFF));
    out.push_back(static_cast<std::uint8_t>(frame.type));
    out.insert(out.end(), frame.payload.begin(), frame.payload.end());
    return out;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 3) fail(ErrorCode::ParseError, "frame shorter than its header");
    const std::size_t length = (static_cast<std::size_t>(bytes[0]) << 8) | bytes[1];
    if (length == 0 || bytes.size() != length + 2) fail(ErrorCode::ParseError, "frame length mismatch");
    const auto type = bytes[2];
    if (type < 0x01 || type > 0x04) fail(ErrorCode::ParseError, "unknown frame type");
    return {static_cast<FrameType>(type), Bytes(bytes.begin() + 3, bytes.end())};
}

Frame Challenge::to_frame() const {
    Frame f{FrameType::Challenge, Bytes(nonce.begin(), nonce.end())};
    f.payload.insert(f.payload.end(), verifier_id.begin(), verifier_id.end());
    return f;
}

Challenge Challenge::from_frame(const Frame& frame) {
    if (frame.type != FrameType::Challenge || frame.payload.size() < kNonceSize)
        fail(ErrorCode::ParseError, "malformed challenge frame");
    Challenge c;
    std::copy_n(frame.payload.begin(), kNonceSize, c.nonce.begin());
    c.verifier_id.assign(frame.payload.begin() + kNonceSize, frame.payload.end());
    return c;
}

Mac compute_response(const Key& key, const Nonce& nonce, const std::string& verifier_id) {
    Bytes message(nonce.begin(), nonce.end());
    message.insert(message.end(), verifier_id.begin(), verifier_id.end());
    Mac mac{};
    unsigned int len = 0;
    if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), message.data(), message.size(), mac.data(),
              &len) ||
        len != mac.size())
        fail(ErrorCode::InvalidArgument, "HMAC computation failed");
    return mac;
}

bool verify_response(const Key& key, const Nonce& nonce, const std::string& verifier_id,
                     std::span<const std::uint8_t> mac) {
    if (mac.size() != sizeof(Mac)) return false;
    const auto expected = compute_response(key, nonce, verifier_id);
    return CRYPTO_memcmp(expected.data(), mac.data(), expected.size()) == 0;
}

// ---------------------------------------------------------------------------
// keys

std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xF]);
    }
    return out;
}

namespace {

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace

const Key& KeyStore::get(const std::string& verifier_id) const {
    const auto it = keys_.find(verifier_id);
    if (it == keys_.end()) fail(ErrorCode::InvalidArgument, "no key provisioned for verifier " + verifier_id);
    return it->second;
}

KeyStore KeyStore::parse(const std::string& text) {
    KeyStore store;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string content = line.substr(0, line.find('#'));
        const auto t = detail::trim(content);
        if (t.empty()) continue;
        std::istringstream fields{std::string(t)};
        std::string id, hex, extra;
        fields >> id >> hex;
        if (id.empty() || hex.size() != 64 || (fields >> extra))
            fail(ErrorCode::ParseError, "expected `<verifier_id> <64 hex digits>`", line_no);
        Key key{};
        for (std::size_t i = 0; i < key.size(); ++i) {
            const int hi = hex_value(hex[2 * i]);
            const int lo = hex_value(hex[2 * i + 1]);
            if (hi < 0 || lo < 0) fail(ErrorCode::ParseError, "invalid hex digit in key", line_no);
            key[i] = static_cast<std::uint8_t>(hi * 16 + lo);
        }
        store.set(id, key);
    }
    return store;
}

KeyStore KeyStore::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string KeyStore::to_text() const {
    std::string out;
    for (const auto& [id, key] : keys_) out += id + " " + to_hex(key) + "\n";
    return out;
}

void KeyStore::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
    out << to_text();
}

Key derive_key(std::uint64_t seed) {
    Rng rng(mix_seed(seed, fnv1a("shared-key")));
    Key key{};
    for (auto& b : key) b = static_cast<std::uint8_t>(rng.next() & 0xFF);
    return key;
}

// ---------------------------------------------------------------------------
// channels

std::optional<Frame> Endpoint::receive() {
    auto bytes = receive_bytes();
    if (!bytes) return std::nullopt;
    return decode_frame(*bytes);
}

namespace {

struct InprocState {
    std::mutex mutex;
    std::condition_variable cv;
    std::array<std::deque<Bytes>, 2> queues; // queues[i] is read by side i
    bool closed = false;
};

class InprocEndpoint final : public Endpoint {
public:
    InprocEndpoint(std::shared_ptr<InprocState> state, int side) : state_(std::move(state)), side_(side) {}
    ~InprocEndpoint() override { close(); }

    void send_bytes(const Bytes& frame) override {
        {
            std::lock_guard lock(state_->mutex);
            if (state_->closed) fail(ErrorCode::ChannelClosed, "channel closed");
            state_->queues[1 - side_].push_back(frame);
        }
        state_->cv.notify_all();
    }

    std::optional<Bytes> receive_bytes() override {
        std::unique_lock lock(state_->mutex);
        auto& q = state_->queues[side_];
        state_->cv.wait(lock, [&] { return !q.empty() || state_->closed; });
        if (q.empty()) return std::nullopt;
        Bytes out = std::move(q.front());
        q.pop_front();
        return out;
    }

    void close() override {
        {
            std::lock_guard lock(state_->mutex);
            state_->closed = true;
        }
        state_->cv.notify_all();
    }

private:
    std::shared_ptr<InprocState> state_;
    int side_;
};

class TcpEndpoint final : public Endpoint {
public:
    explicit TcpEndpoint(int fd) : fd_(fd) {}
    ~TcpEndpoint() override {
        close();
        ::close(fd_);
    }

    void send_bytes(const Bytes& frame) override {
        if (shut_.load()) fail(ErrorCode::ChannelClosed, "channel closed");
        std::size_t sent = 0;
        while (sent < frame.size()) {
            const auto n = ::send(fd_, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) fail(ErrorCode::ChannelClosed, "socket send failed");
            sent += static_cast<std::size_t>(n);
        }
    }

    std::optional<Bytes> receive_bytes() override {
        Bytes header(2);
        if (!read_exact(header.data(), 2)) return std::nullopt;
        const std::size_t length = (static_cast<std::size_t>(header[0]) << 8) | header[1];
        Bytes frame(length + 2);
        frame[0] = header[0];
        frame[1] = header[1];
        if (!read_exact(frame.data() + 2, length)) return std::nullopt;
        return frame;
    }

    void close() override {
        if (!shut_.exchange(true)) ::shutdown(fd_, SHUT_RDWR);
    }

private:
    bool read_exact(std::uint8_t* out, std::size_t n) {
        std::size_t got = 0;
        while (got < n) {
            const auto r = ::recv(fd_, out + got, n - got, 0);
            if (r < 0 && errno == EINTR) continue;
            if (r <= 0) return false;
            got += static_cast<std::size_t>(r);
        }
        return true;
    }

    int fd_;
    std::atomic<bool> shut_{false};
};

[[noreturn]] void socket_fail(const char* what) {
    fail(ErrorCode::IoError, std::string(what) + ": " + std::strerror(errno));
}

} // namespace

EndpointPair make_inproc_pair() {
    auto state = std::make_shared<InprocState>();
    return {std::make_unique<InprocEndpoint>(state, 0), std::make_unique<InprocEndpoint>(state, 1)};
}

EndpointPair make_tcp_pair() {
    const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listener < 0) socket_fail("socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    socklen_t len = sizeof(addr);
    if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 || ::listen(listener, 1) < 0 ||
        ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len) < 0) {
        ::close(listener);
        socket_fail("listen");
    }
    const int client = ::socket(AF_INET, SOCK_STREAM, 0);
    if (client < 0 || ::connect(client, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
        ::close(listener);
        if (client >= 0) ::close(client);
        socket_fail("connect");
    }
    const int server = ::accept(listener, nullptr, nullptr);
    ::close(listener);
    if (server < 0) {
        ::close(client);
        socket_fail("accept");
    }
    return {std::make_unique<TcpEndpoint>(client), std::make_unique<TcpEndpoint>(server)};
}

EndpointPair make_pair(Transport transport) {
    return transport == Transport::TcpLoopback ? make_tcp_pair() : make_inproc_pair();
}

Relay::Relay(Endpoint& a, Endpoint& b, std::chrono::milliseconds latency) : a_(a), b_(b), latency_(latency) {
    a_to_b_ = std::thread([this] { pump(a_, b_, Direction::AToB); });
    b_to_a_ = std::thread([this] { pump(b_, a_, Direction::BToA); });
}

Relay::~Relay() {
    a_.close();
    b_.close();
    join();
}

void Relay::join() {
    if (a_to_b_.joinable()) a_to_b_.join();
    if (b_to_a_.joinable()) b_to_a_.join();
}

void Relay::pump(Endpoint& from, Endpoint& to, Direction direction) {
    while (auto frame = from.receive_bytes()) {
        if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
        {
            std::lock_guard lock(mutex_);
            records_.push_back({direction, *frame});
        }
        try {
            to.send_bytes(*frame);
        } catch (const Error&) {
            break;
        }
    }
    from.close();
    to.close();
}

std::vector<Relay::Record> Relay::transcript() const {
    std::lock_guard lock(mutex_);
    return records_;
}

std::size_t Relay::forwarded() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

std::unique_ptr<Relay> relay_forward(Endpoint& a, Endpoint& b, std::chrono::milliseconds latency) {
    return std::make_unique<Relay>(a, b, latency);
}

// ---------------------------------------------------------------------------
// gate

LiveSource static_source(PrimitiveSequence observed) {
    return [seq = std::move(observed)](Timestamp now) {
        std::vector<Primitive> out;
        for (const auto& p : seq)
            if (p.t <= now) out.push_back(p);
        return PrimitiveSequence(std::move(out));
    };
}

GateDecision verify_proximity(std::span<const ReferencePath> paths, const LiveSource& live, Timestamp now,
                              int max_attempts, const ScoringScheme& scheme) {
    if (paths.empty()) fail(ErrorCode::NoReferencePath, "no reference path to verify against");
    if (max_attempts < 1) fail(ErrorCode::InvalidArgument, "at least one attempt is required");
    GateDecision decision;
    for (int k = 0; k < max_attempts; ++k) {
        const Timestamp t = now + k * kNanosPerSecond;
        const auto observed = strip_stationary(live(t));
        decision.attempts_used = k + 1;
        for (std::size_t i = 0; i < paths.size(); ++i) {
            const auto candidate = trim_window(observed, paths[i].length_min * 60.0, t);
            const int score = needleman_wunsch(paths[i].medoid(), candidate, scheme).value;
            if (!decision.best_score || score > *decision.best_score) {
                decision.best_score = score;
                decision.path_index = i;
            }
            if (static_cast<double>(score) > paths[i].threshold.d) {
                decision.pass = true;
                decision.path_index = i;
                return decision;
            }
        }
    }
    return decision;
}

// ---------------------------------------------------------------------------
// sessions

std::string_view to_string(SessionOutcome::Result result) {
    switch (result) {
    case SessionOutcome::Result::Accepted: return "Accepted";
    case SessionOutcome::Result::FallbackToExplicit: return "FallbackToExplicit";
    case SessionOutcome::Result::Rejected: return "Rejected";
    }
    return "?";
}

namespace {

class Transcript {
public:
    void add(std::string line) {
        std::lock_guard lock(mutex_);
        lines_.push_back(std::move(line));
    }
    std::vector<std::string> lines() const {
        std::lock_guard lock(mutex_);
        return lines_;
    }

private:
    mutable std::mutex mutex_;
    std::vector<std::string> lines_;
};

struct ProverState {
    bool unexpected_close = false;
    bool declined = false;
    bool fallback = false;
    bool response_sent = false;
    std::optional<FrameType> verdict;
    GateDecision gate;
    std::exception_ptr error;
};

struct VerifierState {
    bool saw_close = false;
    bool mac_ok = false;
    bool got_response = false;
    std::exception_ptr error;
};

void run_prover(ProverConfig& cfg, Endpoint& end, ProverState& st, Transcript& log) {
    auto frame = end.receive();
    if (!frame) {
        st.unexpected_close = true;
        log.add("prover: channel closed before challenge");
        return;
    }
    const auto challenge = Challenge::from_frame(*frame);
    log.add("prover: received CHALLENGE for " + challenge.verifier_id);

    if (cfg.gate_enabled) {
        try {
            if (!cfg.repository) fail(ErrorCode::NoReferencePath, "prover has no repository");
            st.gate = verify_proximity(cfg.repository->paths_for(challenge.verifier_id), cfg.live, cfg.now,
                                       cfg.max_attempts);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoReferencePath) throw;
            st.gate = {};
        }
        log.add(std::string("prover: gate ") + (st.gate.pass ? "PASS" : "FAIL") + " after " +
                std::to_string(st.gate.attempts_used) + " attempt(s)" +
                (st.gate.best_score ? ", best score " + std::to_string(*st.gate.best_score) : std::string()));
        if (!st.gate.pass) {
            st.fallback = true;
            if (!cfg.user_confirms) {
                st.declined = true;
                log.add("prover: explicit confirmation declined, no response");
                end.close();
                return;
            }
            log.add("prover: explicit confirmation given");
            if (cfg.repository) {
                const auto candidate = cfg.live(cfg.now);
                try {
                    const auto it = cfg.repository->paths.find(challenge.verifier_id);
                    if (it != cfg.repository->paths.end() && !it->second.empty()) {
                        confirm(*cfg.repository, challenge.verifier_id, st.gate.path_index.value_or(0), candidate,
                                cfg.update);
                        log.add("prover: candidate added to reference path");
                    } else {
                        enroll(*cfg.repository, challenge.verifier_id, candidate, cfg.enroll_length_min);
                        log.add("prover: candidate enrolled as new reference path");
                    }
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::EmptySequence) throw;
                    log.add("prover: candidate empty, nothing enrolled");
                }
            }
        }
    }

    if (!cfg.keys.contains(challenge.verifier_id)) {
        st.declined = true;
        log.add("prover: no key for " + challenge.verifier_id);
        end.close();
        return;
    }
    const auto mac = compute_response(cfg.keys.get(challenge.verifier_id), challenge.nonce, challenge.verifier_id);
    log.add("prover: sending RESPONSE");
    try {
        end.send({FrameType::Response, Bytes(mac.begin(), mac.end())});
    } catch (const Error&) {
        st.unexpected_close = true;
        log.add("prover: channel closed while responding");
        return;
    }
    st.response_sent = true;
    auto verdict = end.receive();
    if (!verdict) {
        st.unexpected_close = true;
        log.add("prover: channel closed before verdict");
        return;
    }
    st.verdict = verdict->type;
    log.add("prover: received " + std::string(to_string(verdict->type)));
    end.close();
}

void run_verifier(const VerifierConfig& cfg, Endpoint& end, VerifierState& st, Transcript& log) {
    Rng rng(cfg.nonce_seed);
    Challenge challenge;
    challenge.verifier_id = cfg.verifier_id;
    for (auto& b : challenge.nonce) b = static_cast<std::uint8_t>(rng.next() & 0xFF);
    log.add("verifier: sending CHALLENGE nonce=" + to_hex(challenge.nonce));
    try {
        end.send(challenge.to_frame());
    } catch (const Error&) {
        st.saw_close = true;
        return;
    }
    auto frame = end.receive();
    if (!frame) {
        st.saw_close = true;
        log.add("verifier: channel closed without response");
        end.close();
        return;
    }
    if (frame->type != FrameType::Response) fail(ErrorCode::ParseError, "expected a RESPONSE frame");
    st.got_response = true;
    st.mac_ok = verify_response(cfg.key, challenge.nonce, cfg.verifier_id, frame->payload);
    log.add(std::string("verifier: RESPONSE ") + (st.mac_ok ? "valid" : "invalid") + ", sending " +
            (st.mac_ok ? "ACCEPT" : "REJECT"));
    try {
        end.send({st.mac_ok ? FrameType::Accept : FrameType::Reject, {}});
    } catch (const Error&) {
        st.saw_close = true;
    }
    end.close();
}

} // namespace

SessionOutcome run_session(ProverConfig& prover, const VerifierConfig& verifier, Endpoint& prover_end,
                           Endpoint& verifier_end) {
    Transcript log;
    ProverState ps;
    VerifierState vs;
    std::thread prover_thread([&] {
        try {
            run_prover(prover, prover_end, ps, log);
        } catch (...) {
            ps.error = std::current_exception();
            prover_end.close();
        }
    });
    std::thread verifier_thread([&] {
        try {
            run_verifier(verifier, verifier_end, vs, log);
        } catch (...) {
            vs.error = std::current_exception();
            verifier_end.close();
        }
    });
    prover_thread.join();
    verifier_thread.join();
    if (ps.error) std::rethrow_exception(ps.error);
    if (vs.error) std::rethrow_exception(vs.error);

    SessionOutcome out;
    out.transcript = log.lines();
    out.attempts_used = ps.gate.attempts_used;
    out.gate_score = ps.gate.best_score;
    out.gate_passed = ps.gate.pass;
    out.response_sent = ps.response_sent;
    out.verifier_accepted = vs.got_response && vs.mac_ok;

    if (ps.declined) {
        out.result = SessionOutcome::Result::Rejected;
        return out;
    }
    if (ps.unexpected_close || vs.saw_close) fail(ErrorCode::ChannelClosed, "channel closed mid-session");
    if (!vs.mac_ok) fail(ErrorCode::MacMismatch, "verifier rejected the response MAC");
    out.result = ps.fallback ? SessionOutcome::Result::FallbackToExplicit : SessionOutcome::Result::Accepted;
    return out;
}

std::string_view to_string(Scenario scenario) {
    switch (scenario) {
    case Scenario::Benign: return "benign";
    case Scenario::Relay: return "relay";
    case Scenario::RelayNoGate: return "relay-nogate";
    }
    return "?";
}

std::optional<Scenario> scenario_from_string(std::string_view name) {
    if (name == "benign") return Scenario::Benign;
    if (name == "relay") return Scenario::Relay;
    if (name == "relay-nogate") return Scenario::RelayNoGate;
    return std::nullopt;
}

std::optional<Transport> transport_from_string(std::string_view name) {
    if (name == "inproc") return Transport::InProcess;
    if (name == "tcp") return Transport::TcpLoopback;
    return std::nullopt;
}

ScenarioSetup make_demo_setup(std::uint64_t seed, int enrolled_instances, double length_min) {
    if (enrolled_instances < 1) fail(ErrorCode::InvalidArgument, "at least one enrolled instance is required");
    const auto corpus = synthesize_corpus(1, enrolled_instances + 1, {}, {}, seed);
    const auto& route = corpus.routes.front();
    ScenarioSetup setup;
    setup.key = derive_key(seed);
    const std::size_t index = enroll(setup.repository, setup.verifier_id, route.instances[0], length_min);
    for (int i = 1; i < enrolled_instances; ++i)
        confirm(setup.repository, setup.verifier_id, index, route.instances[static_cast<std::size_t>(i)]);
    setup.approach = route.instances[static_cast<std::size_t>(enrolled_instances)];
    setup.now = setup.approach.empty() ? 0 : setup.approach.primitives().back().t;
    return setup;
}

ScenarioResult run_scenario(Scenario scenario, ScenarioSetup& setup, const ScenarioOptions& options) {
    ProverConfig prover;
    prover.keys.set(setup.verifier_id, setup.key);
    prover.repository = &setup.repository;
    prover.now = setup.now;
    VerifierConfig verifier{setup.verifier_id, setup.key, mix_seed(options.session_seed, fnv1a("nonce"))};

    ScenarioResult result;
    if (scenario == Scenario::Benign) {
        prover.live = static_source(setup.approach);
        prover.user_confirms = true;
        auto channel = make_pair(options.transport);
        result.outcome = run_session(prover, verifier, *channel.a, *channel.b);
        return result;
    }

    // The victim's device is far from the door and has not moved.
    prover.live = static_source(PrimitiveSequence{});
    prover.user_confirms = false;
    prover.gate_enabled = scenario == Scenario::Relay;
    auto near_prover = make_pair(options.transport);
    auto near_verifier = make_pair(options.transport);
    auto relay = relay_forward(*near_prover.b, *near_verifier.a, options.relay_latency);
    // On error the relay's destructor closes both sides and joins.
    result.outcome = run_session(prover, verifier, *near_prover.a, *near_verifier.b);
    relay->join();
    result.relayed = relay->transcript();
    return result;
}

} // namespace stash
