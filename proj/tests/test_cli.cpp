#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "stash/trajectory.hpp"
#include "test_util.hpp"

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = stash::cli::dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

} // namespace

TEST(Cli, HelpAndUsageErrors) {
    EXPECT_EQ(cli({"--help"}).code, 0);
    EXPECT_EQ(cli({"no-such-command"}).code, 2);
    EXPECT_EQ(cli({"simulate", "--scenario", "teleport"}).code, 2);
}

TEST(Cli, CompareStripsStationary) {
    testutil::TempDir dir("cli_cmp");
    stash::save_sequence(stash::sequence_from_text("MSMLL"), (dir / "a.seq").string());
    stash::save_sequence(stash::sequence_from_text("MMLL"), (dir / "b.seq").string());
    const auto r = cli({"compare", (dir / "a.seq").string(), (dir / "b.seq").string()});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "4\n");
}

TEST(Cli, DomainErrorsExitOne) {
    const auto r = cli({"seq", "show", "/nonexistent.seq"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST(Cli, EnrollVerifyAndShowRepository) {
    testutil::TempDir dir("cli_repo");
    const std::string walk = (dir / "walk.seq").string();
    const std::string repo = (dir / "repo.json").string();
    stash::save_sequence(stash::sequence_from_text("MMMMLLLMMMMMMRRRRRRMMMMMMMLLMMMM"), walk);
    EXPECT_EQ(cli({"enroll", walk, "--repo", repo, "--verifier", "door"}).code, 0);
    const auto v = cli({"verify", walk, "--repo", repo, "--verifier", "door"});
    EXPECT_EQ(v.code, 0);
    EXPECT_EQ(v.out.rfind("PASS", 0), 0u) << v.out;
    const auto show = cli({"repo", "show", "--repo", repo});
    EXPECT_NE(show.out.find("door[0]"), std::string::npos);
}

TEST(Cli, SimulateRelayIsRejected) {
    const auto r = cli({"--seed", "42", "simulate", "--scenario", "relay"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("verifier_accepted=no"), std::string::npos) << r.out;
}

TEST(Cli, SynthThenEval) {
    testutil::TempDir dir("cli_synth");
    const std::string corpus = (dir / "corpus").string();
    const auto s = cli({"--seed", "3", "--out", corpus, "synth", "--routes", "4", "--instances", "3",
                        "--min-minutes", "3", "--max-minutes", "4"});
    ASSERT_EQ(s.code, 0) << s.err;
    const auto e = cli({"eval", "--corpus", corpus, "--sweep", "length"});
    EXPECT_EQ(e.code, 0) << e.err;
    EXPECT_EQ(e.out.rfind("axis,axis_value,scheme,routes", 0), 0u);
}

TEST(Cli, ConfigRoundTrip) {
    testutil::TempDir dir("cli_cfg");
    const auto c = cli({"config"});
    ASSERT_EQ(c.code, 0);
    std::ofstream(dir / "c.toml") << c.out;
    EXPECT_EQ(cli({"--config", (dir / "c.toml").string(), "config"}).out, c.out);
    std::ofstream(dir / "bad.toml") << "bogus = 1\n";
    EXPECT_EQ(cli({"--config", (dir / "bad.toml").string(), "config"}).code, 1);
}

TEST(Cli, ClassifyTurnsAndMergeMatchExtract) {
    testutil::TempDir dir("cli_merge");
    const auto d = [&](const char* name) { return (dir / name).string(); };
    ASSERT_EQ(cli({"--seed", "4", "--out", d("corpus"), "synth", "--routes", "1", "--instances", "1",
                   "--min-minutes", "1", "--max-minutes", "2", "--recording", d("walk.csv")})
                  .code,
              0);
    ASSERT_EQ(cli({"--out", d("ms.seq"), "classify", d("walk.csv")}).code, 0);
    ASSERT_EQ(cli({"--out", d("turns.jsonl"), "turns", d("walk.csv")}).code, 0);
    ASSERT_EQ(cli({"--out", d("merged.seq"), "seq", "merge", d("ms.seq"), d("turns.jsonl")}).code, 0);
    ASSERT_EQ(cli({"--out", d("extracted.seq"), "seq", "extract", d("walk.csv")}).code, 0);
    EXPECT_EQ(stash::load_sequence(d("merged.seq")), stash::load_sequence(d("extracted.seq")));
    EXPECT_EQ(cli({"--out", d("r.csv"), "ingest", d("walk.csv"), "--rate", "10"}).code, 0);
}
