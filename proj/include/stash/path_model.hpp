#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "stash/common.hpp"
#include "stash/trajectory.hpp"

namespace stash {

/// First-order chain over the moving alphabet {M, L, R}; S never appears.
struct MarkovChain {
    static constexpr std::size_t kStates = 3;
    static constexpr std::array<Symbol, kStates> kSymbols = {Symbol::Move, Symbol::Left, Symbol::Right};

    std::array<std::array<double, kStates>, kStates> transition{};
    std::array<double, kStates> initial{};

    /// Index of M, L or R; InvalidArgument for S.
    static std::size_t index(Symbol s);
    double probability(Symbol from, Symbol to) const { return transition[index(from)][index(to)]; }
    /// Rows and the initial distribution are non-negative and sum to 1 within 1e-9.
    bool is_stochastic() const;
};

/// Add-one smoothed transition counts (and start-symbol counts for the initial
/// distribution). S symbols are skipped. Throws EmptyCorpus when no sequence
/// has a moving symbol.
MarkovChain fit_markov(std::span<const std::vector<Symbol>> sequences);
MarkovChain fit_markov(std::span<const PrimitiveSequence> sequences);

std::vector<Symbol> sample_path(const MarkovChain& chain, std::size_t length, Rng& rng);
std::vector<Symbol> sample_path(const MarkovChain& chain, std::size_t length, std::uint64_t seed);

struct NoiseModel {
    double p_drop = 0.05;
    double p_insert = 0.03;
    double turn_jitter_deg = 5.0;

    void validate() const;
    static NoiseModel none() { return {0.0, 0.0, 0.0}; }
};

/// One segment of a synthetic route.
struct RouteEvent {
    enum class Kind : char { Straight = 'M', Turn = 'T', Stop = 'S' };
    Kind kind = Kind::Straight;
    int blocks = 1;          ///< 5 s blocks spent (a turn uses one)
    double angle_deg = 0.0;  ///< turns only; positive turns right

    friend bool operator==(const RouteEvent&, const RouteEvent&) = default;
};

struct SyntheticRoute {
    std::vector<RouteEvent> events;
    PrimitiveSequence ground_truth;
    std::vector<PrimitiveSequence> instances;

    friend bool operator==(const SyntheticRoute&, const SyntheticRoute&) = default;
};

struct RouteLength {
    double min_minutes = 6.0;
    double max_minutes = 12.0;
};

struct Corpus {
    std::uint64_t seed = 0;
    NoiseModel noise;
    std::vector<SyntheticRoute> routes;

    friend bool operator==(const Corpus& a, const Corpus& b) {
        return a.seed == b.seed && a.routes == b.routes;
    }
};

/// Primitive rendering of route events with a given turn granularity.
PrimitiveSequence render_route(std::span<const RouteEvent> events, Timestamp start = 0,
                               double granularity_deg = 15.0);

/// Random route events lasting between the given lengths.
std::vector<RouteEvent> random_route(const RouteLength& length, Rng& rng);

/// A noisy repetition of a route: jittered turn angles, dropped and inserted symbols.
PrimitiveSequence perturb_route(std::span<const RouteEvent> events, const NoiseModel& noise, Rng& rng);

struct CorpusOptions {
    /// Ground truths trimmed to this length must score below `max_similarity` pairwise.
    double distinct_window_min = 2.0;
    int max_similarity = 18;
    int max_attempts_per_route = 2000;
};

/// Throws RejectionExhausted if distinct routes cannot be found, InvalidArgument
/// for non-positive sizes.
Corpus synthesize_corpus(int n_routes, int instances_per_route, const RouteLength& length, const NoiseModel& noise,
                         std::uint64_t seed, const CorpusOptions& options = {});

/// Directory with manifest.json plus one .seq file per ground truth and instance.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

} // namespace stash
