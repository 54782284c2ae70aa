#include "stash/alignment.hpp"

#include <algorithm>

namespace stash {

SimilarityScore needleman_wunsch(std::span<const Symbol> a, std::span<const Symbol> b,
                                 const ScoringScheme& scheme) {
    // Keep the shorter sequence along the row to bound memory by min(|a|, |b|).
    const bool swap = b.size() > a.size();
    const auto outer = swap ? b : a;
    const auto inner = swap ? a : b;

    std::vector<int> prev(inner.size() + 1), cur(inner.size() + 1);
    for (std::size_t j = 0; j <= inner.size(); ++j) prev[j] = static_cast<int>(j) * scheme.gap;
    for (std::size_t i = 1; i <= outer.size(); ++i) {
        cur[0] = static_cast<int>(i) * scheme.gap;
        for (std::size_t j = 1; j <= inner.size(); ++j) {
            const int diag = prev[j - 1] + (outer[i - 1] == inner[j - 1] ? scheme.match : scheme.mismatch);
            cur[j] = std::max({diag, prev[j] + scheme.gap, cur[j - 1] + scheme.gap});
        }
        std::swap(prev, cur);
    }
    return {prev[inner.size()], a.size(), b.size()};
}

SimilarityScore needleman_wunsch(const PrimitiveSequence& a, const PrimitiveSequence& b,
                                 const ScoringScheme& scheme) {
    const auto sa = a.symbols();
    const auto sb = b.symbols();
    return needleman_wunsch(sa, sb, scheme);
}

SimilarityScore needleman_wunsch(std::string_view a, std::string_view b, const ScoringScheme& scheme) {
    const auto sa = symbols_from_text(a);
    const auto sb = symbols_from_text(b);
    return needleman_wunsch(sa, sb, scheme);
}

int nw_score(std::span<const Symbol> a, std::span<const Symbol> b, const ScoringScheme& scheme) {
    return needleman_wunsch(a, b, scheme).value;
}

ScoreMatrix pairwise_matrix(std::span<const std::vector<Symbol>> sequences, const ScoringScheme& scheme) {
    const std::size_t n = sequences.size();
    ScoreMatrix m(n, std::vector<int>(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
        m[i][i] = nw_score(sequences[i], sequences[i], scheme);
        for (std::size_t j = i + 1; j < n; ++j) {
            m[i][j] = nw_score(sequences[i], sequences[j], scheme);
            m[j][i] = m[i][j]; // the score depends only on symbol equality, so it is symmetric
        }
    }
    return m;
}

ScoreMatrix pairwise_matrix(std::span<const PrimitiveSequence> sequences, const ScoringScheme& scheme) {
    std::vector<std::vector<Symbol>> symbols;
    symbols.reserve(sequences.size());
    for (const auto& s : sequences) symbols.push_back(s.symbols());
    return pairwise_matrix(symbols, scheme);
}

} // namespace stash
