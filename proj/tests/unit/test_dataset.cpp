#include <cmath>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "jigsaw/agents.hpp"
#include "jigsaw/codec.hpp"
#include "jigsaw/dataset.hpp"
#include "jigsaw/error.hpp"
#include "jigsaw/synth.hpp"
#include "test_support.hpp"

using namespace jigsaw;
using jigsaw::testing::TempDir;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::kIo;
}

Trajectory oracle_run(int m, std::uint64_t seed, int max_turns = 10) {
    EnvConfig cfg;
    cfg.max_turns = max_turns;
    Episode ep = new_episode(jigsaw::testing::diagonal_image(30, 30), m, {}, seed, cfg);
    auto agent = make_agent(AgentKind::kOracle, ep, seed);
    run_episode(ep, *agent);
    return ep.trajectory();
}

}  // namespace

TEST(LargestRemainder, WorkedExample) {
    // Quotas 3.97, 3.33, 2.69: floors sum to 8, the two largest remainders win.
    EXPECT_EQ(largest_remainder(10, {0.397, 0.333, 0.269}), (std::vector<std::size_t>{4, 3, 3}));
    // Equal remainders go to the lower index.
    EXPECT_EQ(largest_remainder(2, {1, 1, 1}), (std::vector<std::size_t>{1, 1, 0}));
    EXPECT_EQ(largest_remainder(0, {1, 2}), (std::vector<std::size_t>{0, 0}));
}

TEST(LargestRemainder, SumAndQuotaProperties) {
    Rng rng(17);
    for (int rep = 0; rep < 500; ++rep) {
        const std::size_t total = uniform_below(rng, 1000);
        std::vector<double> w(1 + uniform_below(rng, 6));
        for (double& x : w) x = uniform_unit(rng) + 0.01;
        const auto shares = largest_remainder(total, w);
        double sum_w = 0.0;
        for (double x : w) sum_w += x;
        std::size_t sum = 0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double quota = static_cast<double>(total) * w[i] / sum_w;
            EXPECT_GE(static_cast<double>(shares[i]), std::floor(quota) - 1e-9);
            EXPECT_LE(static_cast<double>(shares[i]), std::ceil(quota) + 1e-9);
            sum += shares[i];
        }
        EXPECT_EQ(sum, total);
    }
}

TEST(LargestRemainder, RejectsBadWeights) {
    EXPECT_EQ(code_of([] { largest_remainder(3, {0.0, 0.0}); }), ErrorCode::kInvalidConfig);
    EXPECT_EQ(code_of([] { largest_remainder(3, {-1.0, 2.0}); }), ErrorCode::kInvalidConfig);
}

TEST(Manifest, JsonlRoundTripAndStrictKeys) {
    DatasetManifest m;
    m.entries.push_back({"a/b.png", 2, 1, 18446744073709551615ULL, "cat"});
    m.entries.push_back({"c.png", 3, 0, 7, kUncategorized});
    EXPECT_EQ(manifest_from_jsonl(manifest_to_jsonl(m)).entries, m.entries);
    EXPECT_EQ(code_of([] { manifest_from_jsonl("{\"image_path\":\"x\",\"oops\":1}\n"); }), ErrorCode::kSchema);
    EXPECT_EQ(code_of([] { manifest_from_jsonl("not json\n"); }), ErrorCode::kSchema);
    const auto mix = m.mixture();
    EXPECT_DOUBLE_EQ(mix.at("cat"), 0.5);
}

TEST(Synthesis, DeterministicAndBalanced) {
    TempDir dir("synth");
    CorpusSpec spec;
    spec.count = 20;
    spec.seed = 3;
    spec.width = spec.height = 24;
    write_synthetic_corpus(dir.path(), spec);

    SynthesisConfig cfg;
    cfg.m = 2;
    cfg.seed = 11;
    cfg.per_level_count = 2;
    const SynthesisResult a = synthesize_puzzles(dir.path(), cfg);
    const SynthesisResult b = synthesize_puzzles(dir.path(), cfg);
    EXPECT_EQ(a.manifest.entries, b.manifest.entries);
    EXPECT_TRUE(a.warnings.empty());
    ASSERT_EQ(a.manifest.entries.size(), 3u * 40u);  // levels 0..2, 20 images x 2

    std::map<int, std::map<std::string, std::size_t>> per_level;
    std::set<std::uint64_t> seeds;
    for (const auto& e : a.manifest.entries) {
        EXPECT_EQ(e.m, 2);
        ++per_level[e.level][e.category_tag];
        seeds.insert(e.seed);
    }
    EXPECT_EQ(seeds.size(), a.manifest.entries.size());
    ASSERT_EQ(per_level.size(), 3u);

    // Category split per level follows the corpus proportions by largest remainder.
    const auto corpus = list_corpus(dir.path());
    std::map<std::string, double> counts;
    for (const auto& img : corpus) counts[img.category] += 1.0;
    std::vector<double> w;
    for (const auto& [cat, c] : counts) w.push_back(c);
    const auto expect = largest_remainder(40, w);
    for (const auto& [level, cats] : per_level) {
        std::size_t k = 0;
        for (const auto& [cat, c] : counts) EXPECT_EQ(cats.at(cat), expect[k++]) << cat;
    }

    SynthesisConfig other = cfg;
    other.seed = 12;
    EXPECT_NE(synthesize_puzzles(dir.path(), other).manifest.entries, a.manifest.entries);
}

TEST(Synthesis, ExplicitMixtureAndLevels) {
    TempDir dir("mix");
    CorpusSpec spec;
    spec.count = 10;
    spec.width = spec.height = 24;
    write_synthetic_corpus(dir.path(), spec);
    SynthesisConfig cfg;
    cfg.m = 3;
    cfg.levels = {0, 7};
    cfg.mixture = {{std::string(kCategoryHighRes), 1.0}, {std::string(kCategoryText), 1.0}, {std::string(kCategoryDense), 0.0}};
    const auto res = synthesize_puzzles(dir.path(), cfg);
    std::map<std::string, int> cats;
    for (const auto& e : res.manifest.entries) {
        EXPECT_TRUE(e.level == 0 || e.level == 7);
        ++cats[e.category_tag];
    }
    EXPECT_EQ(cats.count(std::string(kCategoryDense)), 0u);
    EXPECT_EQ(cats[std::string(kCategoryHighRes)], 10);
    EXPECT_EQ(cats[std::string(kCategoryText)], 10);
    cfg.levels = {8};
    EXPECT_EQ(code_of([&] { synthesize_puzzles(dir.path(), cfg); }), ErrorCode::kInvalidLevel);
}

TEST(Synthesis, SkipsBadFilesAndRejectsEmptyCorpus) {
    TempDir dir("bad");
    write_png(dir.path() / "ok.png", jigsaw::testing::diagonal_image(16, 16));
    std::ofstream(dir.path() / "broken.png") << "not a png";
    SynthesisConfig cfg;
    const auto res = synthesize_puzzles(dir.path(), cfg);
    EXPECT_EQ(res.warnings.size(), 1u);
    EXPECT_EQ(res.manifest.entries.size(), 3u);
    EXPECT_EQ(res.manifest.entries[0].category_tag, kUncategorized);

    TempDir empty("empty");
    EXPECT_EQ(code_of([&] { synthesize_puzzles(empty.path(), cfg); }), ErrorCode::kEmptyCorpus);
    EXPECT_EQ(code_of([&] { synthesize_puzzles(empty.path() / "missing", cfg); }), ErrorCode::kEmptyCorpus);
}

TEST(Filter, StepWindowAndAccuracy) {
    BalanceFilterConfig cfg;
    cfg.step_min = 3;
    cfg.step_max_keep = 6;
    std::vector<Trajectory> trajs;
    // 2x2 runs take 3 or 4 turns; 3x3 runs take 6 to 9.
    for (std::uint64_t seed = 0; seed < 30; ++seed) trajs.push_back(oracle_run(seed % 2 ? 3 : 2, seed));
    Episode wrong = new_episode(jigsaw::testing::diagonal_image(30, 30), 2, {}, 1);
    wrong.step("<think>t</think><answer>" + Arrangement::identity(4).to_literal() + "</answer>");
    trajs.push_back(wrong.trajectory());

    const FilterResult res = filter_trajectories(trajs, cfg);
    EXPECT_EQ(res.kept.size() + res.rejected.size(), trajs.size());
    for (std::size_t i : res.kept) {
        EXPECT_GE(trajs[i].executed_turns, 3);
        EXPECT_LE(trajs[i].executed_turns, 6);
    }
    ASSERT_FALSE(res.rejected.empty());
    EXPECT_NE(res.rejected.front().second.find("above step_max_keep"), std::string::npos);
    EXPECT_EQ(res.rejected.back(), (std::pair<std::size_t, std::string>{30, "accuracy 0"}));
    // Oracle runs only swap and observe, so crop and zoom coverage is zero.
    EXPECT_DOUBLE_EQ(res.kind_coverage.at(ActionKind::kSwap), 1.0);
    EXPECT_DOUBLE_EQ(res.kind_coverage.at(ActionKind::kCrop), 0.0);
    EXPECT_EQ(res.warnings.size(), 2u);
}

TEST(Filter, ActionKinds) {
    const Trajectory t = oracle_run(2, 4);
    const auto kinds = action_kinds(t);
    EXPECT_NE(std::find(kinds.begin(), kinds.end(), ActionKind::kObserve), kinds.end());
    BalanceFilterConfig bad;
    bad.step_min = 9;
    bad.step_max_keep = 2;
    EXPECT_THROW(bad.validate(), Error);
}
