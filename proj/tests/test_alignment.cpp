#include <gtest/gtest.h>

#include "oracles.hpp"
#include "stash/alignment.hpp"
#include "stash/common.hpp"

using namespace stash;

namespace {

constexpr std::array<Symbol, 4> kAlphabet = {Symbol::Move, Symbol::Still, Symbol::Left, Symbol::Right};

std::vector<Symbol> random_symbols(Rng& rng, std::size_t max_len) {
    std::vector<Symbol> s(rng.below(max_len + 1));
    for (auto& c : s) c = kAlphabet[rng.below(4)];
    return s;
}

} // namespace

TEST(NeedlemanWunsch, KnownScores) {
    EXPECT_EQ(needleman_wunsch("MMLR", "MMLR").value, 4);
    EXPECT_EQ(needleman_wunsch("", "").value, 0);
    EXPECT_EQ(needleman_wunsch("", "MML").value, -3);
    EXPECT_EQ(needleman_wunsch("M", "L").value, -2);
    EXPECT_EQ(needleman_wunsch("MLM", "MM").value, 1); // M-M with one gap
    const auto s = needleman_wunsch("MMMM", "LL");
    EXPECT_EQ(s.len_a, 4u);
    EXPECT_EQ(s.len_b, 2u);
}

TEST(NeedlemanWunsch, MatchesExhaustiveAlignment) {
    // Every pair of sequences up to length 3 over the full alphabet.
    std::vector<std::vector<Symbol>> all = {{}};
    for (std::size_t len = 1; len <= 3; ++len) {
        const std::size_t before = all.size();
        for (std::size_t i = 0; i < before; ++i) {
            if (all[i].size() != len - 1) continue;
            for (Symbol c : kAlphabet) {
                auto s = all[i];
                s.push_back(c);
                all.push_back(s);
            }
        }
    }
    for (const auto& a : all)
        for (const auto& b : all) ASSERT_EQ(nw_score(a, b), oracle::alignment_max(a, b));
}

TEST(NeedlemanWunsch, RandomPairsMatchOracleForOtherSchemes) {
    Rng rng(17);
    const ScoringScheme schemes[] = {{}, {2, -1, -2}, {1, -1, -1}};
    for (const auto& scheme : schemes)
        for (int i = 0; i < 300; ++i) {
            const auto a = random_symbols(rng, 6), b = random_symbols(rng, 6);
            ASSERT_EQ(nw_score(a, b, scheme), oracle::alignment_max(a, b, scheme));
        }
}

TEST(NeedlemanWunsch, SymmetricAndSelfScoreIsLength) {
    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
        const auto a = random_symbols(rng, 40), b = random_symbols(rng, 40);
        EXPECT_EQ(nw_score(a, b), nw_score(b, a));
        EXPECT_EQ(nw_score(a, a), static_cast<int>(a.size()));
        EXPECT_GE(nw_score(a, b), -static_cast<int>(a.size() + b.size()));
        EXPECT_LE(nw_score(a, b), static_cast<int>(std::min(a.size(), b.size())));
    }
}

TEST(NeedlemanWunsch, SequenceOverloadUsesSymbols) {
    const auto a = sequence_from_text("MMLLR", 0, 1), b = sequence_from_text("MLLR", 100, 3);
    EXPECT_EQ(needleman_wunsch(a, b).value, needleman_wunsch("MMLLR", "MLLR").value);
}

TEST(ScoringScheme, DefaultRelation) {
    EXPECT_TRUE(ScoringScheme{}.is_default_relation());
    EXPECT_FALSE((ScoringScheme{1, -1, -2}).is_default_relation());
}

TEST(PairwiseMatrix, SymmetricWithSelfScoresOnDiagonal) {
    Rng rng(2);
    std::vector<std::vector<Symbol>> seqs;
    for (int i = 0; i < 7; ++i) seqs.push_back(random_symbols(rng, 20));
    const auto m = pairwise_matrix(seqs);
    ASSERT_EQ(m.size(), seqs.size());
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        EXPECT_EQ(m[i][i], static_cast<int>(seqs[i].size()));
        for (std::size_t j = 0; j < seqs.size(); ++j) {
            EXPECT_EQ(m[i][j], m[j][i]);
            EXPECT_EQ(m[i][j], nw_score(seqs[i], seqs[j]));
        }
    }
    EXPECT_TRUE(pairwise_matrix(std::span<const std::vector<Symbol>>{}).empty());
}
