#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stash/common.hpp"

namespace stash {

struct TurnEvent;

enum class Symbol : char { Move = 'M', Still = 'S', Left = 'L', Right = 'R' };

inline char to_char(Symbol s) { return static_cast<char>(s); }
std::optional<Symbol> symbol_from_char(char c);

struct Primitive {
    Symbol symbol = Symbol::Move;
    Timestamp t = 0;

    friend bool operator==(const Primitive&, const Primitive&) = default;
};

/// Temporally ordered primitives (non-decreasing timestamps).
class PrimitiveSequence {
public:
    PrimitiveSequence() = default;
    explicit PrimitiveSequence(std::vector<Primitive> primitives);

    const std::vector<Primitive>& primitives() const { return primitives_; }
    std::size_t size() const { return primitives_.size(); }
    bool empty() const { return primitives_.empty(); }
    const Primitive& operator[](std::size_t i) const { return primitives_[i]; }
    auto begin() const { return primitives_.begin(); }
    auto end() const { return primitives_.end(); }

    /// Seconds from the first to the last primitive.
    double duration_s() const;

    std::vector<Symbol> symbols() const;
    /// Symbols as text, e.g. "MMRRMM".
    std::string text() const;

    friend bool operator==(const PrimitiveSequence&, const PrimitiveSequence&) = default;

private:
    std::vector<Primitive> primitives_;
};

/// Build a sequence from text with evenly spaced timestamps (testing and tooling).
PrimitiveSequence sequence_from_text(std::string_view text, Timestamp start = 0,
                                     Timestamp step = 5 * kNanosPerSecond);

std::vector<Symbol> symbols_from_text(std::string_view text);

/// Length of one M/S block.
inline constexpr Timestamp kMovementBlock = 5 * kNanosPerSecond;

/// Combine the fixed-rate M/S stream with turn events. M/S primitives whose
/// block [t, t + block) touches a turn's [t_begin, t_end] are dropped; each
/// turn contributes its run of L/R symbols at t_begin.
PrimitiveSequence merge_streams(std::span<const Primitive> movement, std::span<const TurnEvent> turns,
                                Timestamp block = kMovementBlock);

PrimitiveSequence strip_stationary(const PrimitiveSequence& seq);

enum class TrimAnchor { End };

/// Keep primitives with t in [t_last - L, t_last] (closed).
PrimitiveSequence trim_to_duration(const PrimitiveSequence& seq, double length_s,
                                   TrimAnchor anchor = TrimAnchor::End);

/// Keep primitives with t in [now - L, now]; the live-candidate variant.
PrimitiveSequence trim_window(const PrimitiveSequence& seq, double length_s, Timestamp now);

/// One `symbol,t_ns` line per primitive.
std::string serialize(const PrimitiveSequence& seq);
void serialize(const PrimitiveSequence& seq, std::ostream& out);
PrimitiveSequence parse_sequence(std::string_view text);
PrimitiveSequence parse_sequence(std::istream& in);

PrimitiveSequence load_sequence(const std::string& path);
void save_sequence(const PrimitiveSequence& seq, const std::string& path);

} // namespace stash
