#include "stash/trajectory.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "stash/error.hpp"
#include "stash/turn_detector.hpp"
#include "text_util.hpp"

namespace stash {

std::optional<Symbol> symbol_from_char(char c) {
    switch (c) {
    case 'M': return Symbol::Move;
    case 'S': return Symbol::Still;
    case 'L': return Symbol::Left;
    case 'R': return Symbol::Right;
    default: return std::nullopt;
    }
}

PrimitiveSequence::PrimitiveSequence(std::vector<Primitive> primitives) : primitives_(std::move(primitives)) {
    for (std::size_t i = 1; i < primitives_.size(); ++i)
        if (primitives_[i].t < primitives_[i - 1].t)
            fail(ErrorCode::OrderError, "primitive timestamps must be non-decreasing");
}

double PrimitiveSequence::duration_s() const {
    return primitives_.empty() ? 0.0 : ns_to_seconds(primitives_.back().t - primitives_.front().t);
}

std::vector<Symbol> PrimitiveSequence::symbols() const {
    std::vector<Symbol> out;
    out.reserve(primitives_.size());
    for (const auto& p : primitives_) out.push_back(p.symbol);
    return out;
}

std::string PrimitiveSequence::text() const {
    std::string out;
    out.reserve(primitives_.size());
    for (const auto& p : primitives_) out.push_back(to_char(p.symbol));
    return out;
}

std::vector<Symbol> symbols_from_text(std::string_view text) {
    std::vector<Symbol> out;
    out.reserve(text.size());
    for (char c : text) {
        const auto s = symbol_from_char(c);
        if (!s) fail(ErrorCode::ParseError, std::string("unknown primitive symbol '") + c + "'");
        out.push_back(*s);
    }
    return out;
}

PrimitiveSequence sequence_from_text(std::string_view text, Timestamp start, Timestamp step) {
    std::vector<Primitive> out;
    Timestamp t = start;
    for (Symbol s : symbols_from_text(text)) {
        out.push_back({s, t});
        t += step;
    }
    return PrimitiveSequence(std::move(out));
}

PrimitiveSequence merge_streams(std::span<const Primitive> movement, std::span<const TurnEvent> turns,
                                Timestamp block) {
    std::vector<Primitive> kept;
    kept.reserve(movement.size());
    // Both inputs are time-ordered, so one forward cursor over the turns suffices.
    std::size_t first_live = 0;
    for (const Primitive& p : movement) {
        while (first_live < turns.size() && turns[first_live].t_end < p.t) ++first_live;
        bool overlaps = false;
        for (std::size_t k = first_live; k < turns.size() && turns[k].t_begin < p.t + block; ++k) {
            if (p.t <= turns[k].t_end) {
                overlaps = true;
                break;
            }
        }
        if (!overlaps) kept.push_back(p);
    }

    std::vector<Primitive> out;
    out.reserve(kept.size() + turns.size() * 6);
    std::size_t i = 0;
    for (const TurnEvent& ev : turns) {
        while (i < kept.size() && kept[i].t <= ev.t_begin) out.push_back(kept[i++]);
        const Symbol s = ev.direction() == TurnDirection::Left ? Symbol::Left : Symbol::Right;
        for (int n = 0; n < ev.count; ++n) out.push_back({s, ev.t_begin});
    }
    while (i < kept.size()) out.push_back(kept[i++]);
    return PrimitiveSequence(std::move(out));
}

PrimitiveSequence strip_stationary(const PrimitiveSequence& seq) {
    std::vector<Primitive> out;
    out.reserve(seq.size());
    std::copy_if(seq.begin(), seq.end(), std::back_inserter(out),
                 [](const Primitive& p) { return p.symbol != Symbol::Still; });
    return PrimitiveSequence(std::move(out));
}

PrimitiveSequence trim_window(const PrimitiveSequence& seq, double length_s, Timestamp now) {
    if (!(length_s > 0.0)) fail(ErrorCode::InvalidArgument, "trim length must be positive");
    const Timestamp from = now - seconds_to_ns(length_s);
    std::vector<Primitive> out;
    for (const auto& p : seq)
        if (p.t >= from && p.t <= now) out.push_back(p);
    return PrimitiveSequence(std::move(out));
}

PrimitiveSequence trim_to_duration(const PrimitiveSequence& seq, double length_s, TrimAnchor) {
    if (!(length_s > 0.0)) fail(ErrorCode::InvalidArgument, "trim length must be positive");
    if (seq.empty()) return seq;
    return trim_window(seq, length_s, seq.primitives().back().t);
}

void serialize(const PrimitiveSequence& seq, std::ostream& out) {
    for (const auto& p : seq) out << to_char(p.symbol) << ',' << p.t << '\n';
}

std::string serialize(const PrimitiveSequence& seq) {
    std::ostringstream out;
    serialize(seq, out);
    return out.str();
}

PrimitiveSequence parse_sequence(std::istream& in) {
    std::vector<Primitive> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = detail::trim(line);
        if (trimmed.empty()) continue;
        const auto fields = detail::split(trimmed, ',');
        if (fields.size() != 2 || fields[0].size() != 1)
            fail(ErrorCode::ParseError, "expected `symbol,t_ns`", line_no);
        const auto symbol = symbol_from_char(fields[0][0]);
        if (!symbol) fail(ErrorCode::ParseError, "unknown primitive symbol", line_no);
        Timestamp t = 0;
        if (!detail::parse_int(fields[1], t)) fail(ErrorCode::ParseError, "bad timestamp", line_no);
        if (!out.empty() && t < out.back().t) fail(ErrorCode::ParseError, "timestamp regression", line_no);
        out.push_back({*symbol, t});
    }
    return PrimitiveSequence(std::move(out));
}

PrimitiveSequence parse_sequence(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_sequence(in);
}

PrimitiveSequence load_sequence(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path);
    return parse_sequence(in);
}

void save_sequence(const PrimitiveSequence& seq, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path);
    serialize(seq, out);
}

} // namespace stash
