#include "stash/path_model.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "stash/alignment.hpp"
#include "stash/error.hpp"

namespace stash {

std::size_t MarkovChain::index(Symbol s) {
    switch (s) {
    case Symbol::Move: return 0;
    case Symbol::Left: return 1;
    case Symbol::Right: return 2;
    default: fail(ErrorCode::InvalidArgument, "stationary symbols have no Markov state");
    }
}

bool MarkovChain::is_stochastic() const {
    auto ok = [](const std::array<double, kStates>& row) {
        double sum = 0.0;
        for (double p : row) {
            if (!(p >= 0.0)) return false;
            sum += p;
        }
        return std::abs(sum - 1.0) <= 1e-9;
    };
    for (const auto& row : transition)
        if (!ok(row)) return false;
    return ok(initial);
}

MarkovChain fit_markov(std::span<const std::vector<Symbol>> sequences) {
    std::array<std::array<double, 3>, 3> counts{};
    std::array<double, 3> starts{};
    bool any = false;
    for (const auto& seq : sequences) {
        std::optional<std::size_t> prev;
        for (Symbol s : seq) {
            if (s == Symbol::Still) continue;
            const std::size_t cur = MarkovChain::index(s);
            if (prev) counts[*prev][cur] += 1.0;
            else starts[cur] += 1.0;
            prev = cur;
            any = true;
        }
    }
    if (!any) fail(ErrorCode::EmptyCorpus, "no moving symbols to fit a Markov chain on");

    MarkovChain chain;
    for (std::size_t i = 0; i < 3; ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < 3; ++j) total += counts[i][j] + 1.0;
        for (std::size_t j = 0; j < 3; ++j) chain.transition[i][j] = (counts[i][j] + 1.0) / total;
    }
    double total = 0.0;
    for (double c : starts) total += c + 1.0;
    for (std::size_t j = 0; j < 3; ++j) chain.initial[j] = (starts[j] + 1.0) / total;
    return chain;
}

MarkovChain fit_markov(std::span<const PrimitiveSequence> sequences) {
    std::vector<std::vector<Symbol>> symbols;
    symbols.reserve(sequences.size());
    for (const auto& s : sequences) symbols.push_back(s.symbols());
    return fit_markov(symbols);
}

namespace {

std::size_t draw(const std::array<double, 3>& p, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc += p[i];
        if (u < acc) return i;
    }
    // Rounding can leave the cumulative sum a hair under 1.
    for (std::size_t i = p.size(); i-- > 0;)
        if (p[i] > 0.0) return i;
    return 0;
}

} // namespace

std::vector<Symbol> sample_path(const MarkovChain& chain, std::size_t length, Rng& rng) {
    std::vector<Symbol> out;
    out.reserve(length);
    if (length == 0) return out;
    std::size_t state = draw(chain.initial, rng);
    out.push_back(MarkovChain::kSymbols[state]);
    while (out.size() < length) {
        state = draw(chain.transition[state], rng);
        out.push_back(MarkovChain::kSymbols[state]);
    }
    return out;
}

std::vector<Symbol> sample_path(const MarkovChain& chain, std::size_t length, std::uint64_t seed) {
    Rng rng(seed);
    return sample_path(chain, length, rng);
}

void NoiseModel::validate() const {
    if (!(p_drop >= 0.0 && p_drop < 1.0)) fail(ErrorCode::InvalidArgument, "p_drop must lie in [0, 1)");
    if (!(p_insert >= 0.0 && p_insert < 1.0)) fail(ErrorCode::InvalidArgument, "p_insert must lie in [0, 1)");
    if (!(turn_jitter_deg >= 0.0)) fail(ErrorCode::InvalidArgument, "turn jitter must be non-negative");
}

namespace {

int turn_count(double angle_deg, double granularity_deg) {
    return static_cast<int>(std::abs(std::round(angle_deg / granularity_deg)));
}

void append_event(std::vector<Primitive>& out, const RouteEvent& ev, double angle_deg, double granularity_deg,
                  Timestamp& t) {
    switch (ev.kind) {
    case RouteEvent::Kind::Straight:
    case RouteEvent::Kind::Stop:
        for (int b = 0; b < ev.blocks; ++b) {
            out.push_back({ev.kind == RouteEvent::Kind::Stop ? Symbol::Still : Symbol::Move, t});
            t += kMovementBlock;
        }
        break;
    case RouteEvent::Kind::Turn: {
        const int n = turn_count(angle_deg, granularity_deg);
        if (n == 0) {
            out.push_back({Symbol::Move, t});
        } else {
            const Symbol s = angle_deg > 0 ? Symbol::Right : Symbol::Left;
            for (int k = 0; k < n; ++k) out.push_back({s, t});
        }
        t += kMovementBlock * ev.blocks;
        break;
    }
    }
}

} // namespace

PrimitiveSequence render_route(std::span<const RouteEvent> events, Timestamp start, double granularity_deg) {
    std::vector<Primitive> out;
    Timestamp t = start;
    for (const auto& ev : events) append_event(out, ev, ev.angle_deg, granularity_deg, t);
    return PrimitiveSequence(std::move(out));
}

std::vector<RouteEvent> random_route(const RouteLength& length, Rng& rng) {
    if (!(length.min_minutes > 0.0 && length.max_minutes >= length.min_minutes))
        fail(ErrorCode::InvalidArgument, "route length range is invalid");
    static constexpr std::array<double, 8> magnitudes = {15, 30, 45, 45, 90, 90, 90, 135};
    const double minutes = rng.uniform(length.min_minutes, length.max_minutes);
    const int target_blocks = static_cast<int>(std::lround(minutes * 60.0 / 5.0));

    std::vector<RouteEvent> events;
    int blocks = 0;
    while (true) {
        const int straight = 2 + static_cast<int>(rng.below(11));
        events.push_back({RouteEvent::Kind::Straight, straight, 0.0});
        blocks += straight;
        if (blocks >= target_blocks) break;
        if (rng.bernoulli(0.1)) {
            const int wait = 1 + static_cast<int>(rng.below(3));
            events.push_back({RouteEvent::Kind::Stop, wait, 0.0});
            blocks += wait;
        }
        const double magnitude = magnitudes[rng.below(magnitudes.size())];
        events.push_back({RouteEvent::Kind::Turn, 1, rng.bernoulli(0.5) ? magnitude : -magnitude});
        blocks += 1;
    }
    return events;
}

PrimitiveSequence perturb_route(std::span<const RouteEvent> events, const NoiseModel& noise, Rng& rng) {
    noise.validate();
    std::vector<Primitive> clean;
    Timestamp t = 0;
    for (const auto& ev : events) {
        const double angle = ev.kind == RouteEvent::Kind::Turn && noise.turn_jitter_deg > 0.0
                                 ? ev.angle_deg + rng.normal(0.0, noise.turn_jitter_deg)
                                 : ev.angle_deg;
        append_event(clean, ev, angle, 15.0, t);
    }

    std::vector<Primitive> kept;
    kept.reserve(clean.size());
    for (const auto& p : clean)
        if (!rng.bernoulli(noise.p_drop)) kept.push_back(p);

    static constexpr std::array<Symbol, 3> alphabet = {Symbol::Move, Symbol::Left, Symbol::Right};
    std::vector<Primitive> out;
    out.reserve(kept.size() + kept.size() / 8 + 2);
    // Gaps are before each kept symbol plus one after the last.
    for (std::size_t i = 0; i <= kept.size(); ++i) {
        if (rng.bernoulli(noise.p_insert)) {
            const Timestamp at = i < kept.size() ? kept[i].t : (kept.empty() ? 0 : kept.back().t);
            out.push_back({alphabet[rng.below(alphabet.size())], at});
        }
        if (i < kept.size()) out.push_back(kept[i]);
    }
    return PrimitiveSequence(std::move(out));
}

Corpus synthesize_corpus(int n_routes, int instances_per_route, const RouteLength& length, const NoiseModel& noise,
                         std::uint64_t seed, const CorpusOptions& options) {
    if (n_routes < 1 || instances_per_route < 1)
        fail(ErrorCode::InvalidArgument, "corpus needs at least one route and one instance");
    noise.validate();

    Corpus corpus;
    corpus.seed = seed;
    corpus.noise = noise;
    std::vector<std::vector<Symbol>> distinct_keys;
    const double window_s = options.distinct_window_min * 60.0;

    for (int r = 0; r < n_routes; ++r) {
        Rng route_rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
        SyntheticRoute route;
        bool found = false;
        for (int attempt = 0; attempt < options.max_attempts_per_route && !found; ++attempt) {
            auto events = random_route(length, route_rng);
            auto truth = render_route(events);
            auto key = strip_stationary(trim_to_duration(truth, window_s)).symbols();
            found = true;
            for (const auto& other : distinct_keys) {
                if (nw_score(key, other) >= options.max_similarity) {
                    found = false;
                    break;
                }
            }
            if (found) {
                route.events = std::move(events);
                route.ground_truth = std::move(truth);
                distinct_keys.push_back(std::move(key));
            }
        }
        if (!found)
            fail(ErrorCode::RejectionExhausted, "could not find a route distinct from the previous " +
                                                    std::to_string(r) + " routes");
        for (int i = 0; i < instances_per_route; ++i) {
            Rng inst_rng(mix_seed(mix_seed(seed, static_cast<std::uint64_t>(r)), 0x10000u + static_cast<unsigned>(i)));
            route.instances.push_back(perturb_route(route.events, noise, inst_rng));
        }
        corpus.routes.push_back(std::move(route));
    }
    return corpus;
}

namespace {

std::string route_dir_name(std::size_t r) {
    std::ostringstream s;
    s << "route_" << std::setw(2) << std::setfill('0') << r;
    return s.str();
}

std::string instance_name(std::size_t i) {
    std::ostringstream s;
    s << "instance_" << std::setw(2) << std::setfill('0') << i << ".seq";
    return s.str();
}

} // namespace

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());

    nlohmann::json manifest;
    manifest["format"] = "stash-corpus";
    manifest["version"] = 1;
    manifest["seed"] = corpus.seed;
    manifest["noise"] = {{"p_drop", corpus.noise.p_drop},
                         {"p_insert", corpus.noise.p_insert},
                         {"turn_jitter_deg", corpus.noise.turn_jitter_deg}};
    manifest["routes"] = nlohmann::json::array();
    for (std::size_t r = 0; r < corpus.routes.size(); ++r) {
        const auto& route = corpus.routes[r];
        const auto rdir = route_dir_name(r);
        std::filesystem::create_directories(dir / rdir, ec);
        if (ec) fail(ErrorCode::IoError, "cannot create " + (dir / rdir).string());
        nlohmann::json jr;
        jr["ground_truth"] = rdir + "/ground_truth.seq";
        save_sequence(route.ground_truth, (dir / rdir / "ground_truth.seq").string());
        jr["events"] = nlohmann::json::array();
        for (const auto& ev : route.events)
            jr["events"].push_back({{"kind", std::string(1, static_cast<char>(ev.kind))},
                                    {"blocks", ev.blocks},
                                    {"angle_deg", ev.angle_deg}});
        jr["instances"] = nlohmann::json::array();
        for (std::size_t i = 0; i < route.instances.size(); ++i) {
            const auto rel = rdir + "/" + instance_name(i);
            save_sequence(route.instances[i], (dir / rel).string());
            jr["instances"].push_back(rel);
        }
        manifest["routes"].push_back(std::move(jr));
    }
    std::ofstream out(dir / "manifest.json");
    if (!out) fail(ErrorCode::IoError, "cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
}

Corpus load_corpus(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) fail(ErrorCode::IoError, "cannot open " + (dir / "manifest.json").string());
    Corpus corpus;
    try {
        const auto manifest = nlohmann::json::parse(in);
        if (manifest.at("format") != "stash-corpus") fail(ErrorCode::CorruptFile, "not a corpus manifest");
        if (manifest.at("version") != 1) fail(ErrorCode::VersionMismatch, "unsupported corpus version");
        corpus.seed = manifest.at("seed").get<std::uint64_t>();
        const auto& n = manifest.at("noise");
        corpus.noise = {n.at("p_drop").get<double>(), n.at("p_insert").get<double>(),
                        n.at("turn_jitter_deg").get<double>()};
        for (const auto& jr : manifest.at("routes")) {
            SyntheticRoute route;
            route.ground_truth = load_sequence((dir / jr.at("ground_truth").get<std::string>()).string());
            for (const auto& je : jr.at("events")) {
                const auto kind = je.at("kind").get<std::string>();
                if (kind != "M" && kind != "T" && kind != "S") fail(ErrorCode::CorruptFile, "bad route event kind");
                route.events.push_back({static_cast<RouteEvent::Kind>(kind[0]), je.at("blocks").get<int>(),
                                        je.at("angle_deg").get<double>()});
            }
            for (const auto& ji : jr.at("instances"))
                route.instances.push_back(load_sequence((dir / ji.get<std::string>()).string()));
            corpus.routes.push_back(std::move(route));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::CorruptFile, e.what());
    }
    return corpus;
}

} // namespace stash
