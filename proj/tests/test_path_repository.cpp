#include <gtest/gtest.h>

#include <fstream>

#include "oracles.hpp"
#include "stash/path_repository.hpp"
#include "test_util.hpp"

using namespace stash;
using testutil::error_of;

namespace {

PrimitiveSequence walk(std::string_view text) { return sequence_from_text(text, 0, 5 * kNanosPerSecond); }

} // namespace

TEST(PrepareInstance, StripsThenTrims) {
    // 30 primitives, 5 s apart: 145 s; keep the last minute.
    std::string text(30, 'M');
    text[29] = 'L';
    text[28] = 'S';
    const auto p = prepare_instance(walk(text), 1.0);
    EXPECT_EQ(p.text(), std::string(11, 'M') + "L"); // t = 85..135 s, then the turn
    EXPECT_EQ(error_of([] { prepare_instance(walk("SSS"), 1.0); }), ErrorCode::EmptySequence);
}

TEST(SelectMedoid, MatchesRowSumOracle) {
    Rng rng(4);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng.below(9);
        ScoreMatrix m(n, std::vector<int>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) m[i][j] = m[j][i] = static_cast<int>(rng.below(7)) - 3;
        ASSERT_EQ(select_medoid(m), oracle::medoid_by_row_sum(m));
    }
    EXPECT_EQ(select_medoid(ScoreMatrix{{5, 1}, {1, 5}}), 0u);
}

TEST(Enroll, StartsWithInitialThreshold) {
    Repository repo;
    const auto idx = enroll(repo, "door", walk(std::string(30, 'M')), 2.0);
    EXPECT_EQ(idx, 0u);
    const auto& path = repo.paths_for("door").at(0);
    EXPECT_EQ(path.threshold.n, 1);
    EXPECT_DOUBLE_EQ(path.threshold.d, initial_threshold(2.0));
    EXPECT_FALSE(path.threshold.d_l.has_value());
    EXPECT_EQ(repo.instance_count(), 1u);
    EXPECT_EQ(error_of([&] { repo.paths_for("gate"); }), ErrorCode::NoReferencePath);
}

TEST(ConfirmAndUpdate, GrowsInstancesAndMixesThreshold) {
    Repository repo;
    const std::string base = "MMMMLLLMMMMMMRRRRRRMMMMMMMLLMMMMMM";
    enroll(repo, "door", walk(base), 2.0);
    std::string v1 = base, v2 = base;
    v1[3] = 'R';
    v2.erase(10, 1);
    confirm(repo, "door", 0, walk(v1));
    confirm(repo, "door", 0, walk(v2));
    const auto& path = repo.paths_for("door")[0];
    ASSERT_EQ(path.instances.size(), 3u);
    EXPECT_EQ(path.threshold.n, 3);
    ASSERT_TRUE(path.threshold.d_l.has_value());
    EXPECT_NEAR(path.threshold.lambda, 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(path.threshold.d, mixed_threshold(path.threshold.d_i, path.threshold.d_l, 3), 1e-12);
    const auto m = pairwise_matrix(std::span<const PrimitiveSequence>(path.instances));
    EXPECT_EQ(path.medoid_index, oracle::medoid_by_row_sum(m));
    EXPECT_EQ(error_of([&] { confirm(repo, "door", 5, walk(v1)); }), ErrorCode::NoReferencePath);
}

TEST(ConfirmAndUpdate, SeededUpdateIsReproducible) {
    Repository a, b;
    const std::string base = "MMMMLLLMMMMMMRRRRRRMMMMMMM";
    enroll(a, "x", walk(base), 2.0);
    enroll(b, "x", walk(base), 2.0);
    confirm(a, "x", 0, walk(base + "M"));
    confirm(b, "x", 0, walk(base + "M"));
    EXPECT_EQ(a, b);
}

TEST(Repository, JsonRoundTripAndFileHandling) {
    testutil::TempDir dir("repo");
    Repository repo;
    enroll(repo, "door", walk("MMMLLMMMRRMM"), 2.0);
    enroll(repo, "door", walk("MMMMMMRRRMMM"), 1.0);
    enroll(repo, "lab", walk("MLMRM"), 2.0);
    confirm(repo, "door", 0, walk("MMMLLMMMRMM"));
    EXPECT_EQ(repository_from_json(repository_to_json(repo)), repo);

    const auto file = dir / "repo.json";
    save_repository(repo, file);
    EXPECT_EQ(load_repository(file), repo);
    EXPECT_TRUE(load_repository(dir / "absent.json").paths.empty());
}

TEST(Repository, RejectsCorruptAndFutureFiles) {
    EXPECT_EQ(error_of([] { repository_from_json("{]"); }), ErrorCode::CorruptFile);
    EXPECT_EQ(error_of([] { repository_from_json(R"({"format":"other","version":1})"); }), ErrorCode::CorruptFile);
    EXPECT_EQ(error_of([] { repository_from_json(R"({"format":"stash-repository","version":2,"verifiers":{}})"); }),
              ErrorCode::VersionMismatch);

    Repository repo;
    enroll(repo, "door", walk("MMMLL"), 2.0);
    auto text = repository_to_json(repo);
    const auto pos = text.find("\"medoid_index\": 0");
    ASSERT_NE(pos, std::string::npos) << text;
    text.replace(pos, 17, "\"medoid_index\": 4");
    EXPECT_EQ(error_of([&] { repository_from_json(text); }), ErrorCode::CorruptFile);
}
