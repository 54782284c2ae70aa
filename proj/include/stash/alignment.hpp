#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "stash/trajectory.hpp"

namespace stash {

struct ScoringScheme {
    int match = 1;
    int mismatch = -2;
    int gap = -1;

    /// match > 0 > gap > mismatch.
    bool is_default_relation() const { return match > 0 && 0 > gap && gap > mismatch; }
};

struct SimilarityScore {
    int value = 0;
    std::size_t len_a = 0;
    std::size_t len_b = 0;

    friend bool operator==(const SimilarityScore&, const SimilarityScore&) = default;
};

/// Global alignment score. Two-row integer DP, O(|a|·|b|) time.
SimilarityScore needleman_wunsch(std::span<const Symbol> a, std::span<const Symbol> b,
                                 const ScoringScheme& scheme = {});
SimilarityScore needleman_wunsch(const PrimitiveSequence& a, const PrimitiveSequence& b,
                                 const ScoringScheme& scheme = {});
SimilarityScore needleman_wunsch(std::string_view a, std::string_view b, const ScoringScheme& scheme = {});

/// Convenience: just the score value.
int nw_score(std::span<const Symbol> a, std::span<const Symbol> b, const ScoringScheme& scheme = {});

using ScoreMatrix = std::vector<std::vector<int>>;

/// matrix[i][j] = NW(seq_i, seq_j). Symmetric for a symmetric scheme.
ScoreMatrix pairwise_matrix(std::span<const std::vector<Symbol>> sequences, const ScoringScheme& scheme = {});
ScoreMatrix pairwise_matrix(std::span<const PrimitiveSequence> sequences, const ScoringScheme& scheme = {});

} // namespace stash
