#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include "jigsaw/agents.hpp"
#include "jigsaw/error.hpp"
#include "test_support.hpp"

using namespace jigsaw;
using jigsaw::testing::diagonal_image;

namespace {

// Brute force over every layout with an independent cost: sum of squared
// channel differences across each interior edge.
Arrangement brute_force_best(const std::vector<NamedImage>& tiles, int m) {
    const std::size_t n = tiles.size();
    const auto edge = [&](Label a, Label b, bool right) {
        const Image& x = tiles[static_cast<std::size_t>(a)].second;
        const Image& y = tiles[static_cast<std::size_t>(b)].second;
        double s = 0.0;
        const int len = right ? x.height : x.width;
        for (int i = 0; i < len; ++i) {
            for (int c = 0; c < 3; ++c) {
                const int u = right ? x.at(x.width - 1, i)[c] : x.at(i, x.height - 1)[c];
                const int v = right ? y.at(0, i)[c] : y.at(i, 0)[c];
                s += (u - v) * (u - v);
            }
        }
        return s;
    };
    std::vector<Label> p(n);
    std::iota(p.begin(), p.end(), 0);
    std::vector<Label> best;
    double best_cost = 1e300;
    do {
        double cost = 0.0;
        for (int r = 0; r < m; ++r) {
            for (int c = 0; c < m; ++c) {
                const auto k = static_cast<std::size_t>(r * m + c);
                if (c + 1 < m) cost += edge(p[k], p[k + 1], true);
                if (r + 1 < m) cost += edge(p[k], p[k + static_cast<std::size_t>(m)], false);
            }
        }
        if (cost < best_cost) {
            best_cost = cost;
            best = p;
        }
    } while (std::next_permutation(p.begin(), p.end()));
    return Arrangement(best);
}

}  // namespace

TEST(AgentKinds, Names) {
    EXPECT_EQ(agent_kind_from_string("greedy"), AgentKind::kGreedy);
    EXPECT_EQ(to_string(AgentKind::kOracle), "oracle");
    try {
        agent_kind_from_string("human");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kUnknownAgent);
    }
}

TEST(Oracle, SolvesEveryLevelWithinSwapBound) {
    for (int m : {2, 3}) {
        EnvConfig cfg;
        cfg.max_turns = m == 2 ? 5 : 10;
        for (int level = 0; level <= m * m - 2; ++level) {
            for (std::uint64_t seed = 0; seed < 20; ++seed) {
                Episode ep = new_episode(diagonal_image(48, 48), m, DifficultyLevel{level}, seed, cfg);
                const std::size_t d = min_swap_distance(ep.state(), ep.ground_truth());
                auto agent = make_agent(AgentKind::kOracle, ep, seed);
                run_episode(ep, *agent);
                ASSERT_EQ(ep.status(), EpisodeStatus::kAnswered);
                EXPECT_EQ(ep.trajectory().reward->r_acc, 1);
                EXPECT_EQ(ep.trajectory().reward->r_format, 1);
                // One observation turn plus one turn per swap.
                EXPECT_EQ(ep.turn(), static_cast<int>(d) + 1);
                if (m == 2) {
                    EXPECT_LE(d, 3u);
                }
            }
        }
    }
}

TEST(Random, AnswersImmediately) {
    Episode ep = new_episode(diagonal_image(32, 32), 2, {}, 1);
    RandomAgent agent(3);
    run_episode(ep, agent);
    EXPECT_EQ(ep.status(), EpisodeStatus::kAnswered);
    EXPECT_EQ(ep.turn(), 0);
    EXPECT_TRUE(ep.trajectory().metadata.answer.has_value());
}

TEST(Greedy, SearchMatchesBruteForce) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const Image src = jigsaw::testing::noise_image(30, 30, seed);
        Episode ep = new_episode(src, 3, {}, seed);
        const auto tiles = ep.tile_images();
        const EdgeCostTable table = edge_cost_table(tiles, 3);
        const Arrangement exhaustive = best_layout_exhaustive(table);
        const Arrangement brute = brute_force_best(tiles, 3);
        EXPECT_NEAR(layout_cost(table, exhaustive), layout_cost(table, brute), 1e-9);
        // A wide beam reaches the same optimum on nine tiles.
        EXPECT_NEAR(layout_cost(table, best_layout_beam(table, 5000)), layout_cost(table, exhaustive), 1e-9);
    }
}

TEST(Greedy, RecoversSmoothImages) {
    for (int m : {2, 3}) {
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            Episode ep = new_episode(diagonal_image(90, 90), m, DifficultyLevel{0}, seed);
            auto agent = make_agent(AgentKind::kGreedy, ep, seed);
            run_episode(ep, *agent);
            EXPECT_EQ(ep.trajectory().reward->r_acc, 1) << "m=" << m << " seed=" << seed;
            EXPECT_EQ(ep.turn(), 1);
        }
    }
}

TEST(Greedy, BeamOnLargerGrid) {
    Episode ep = new_episode(diagonal_image(120, 120), 4, DifficultyLevel{0}, 2);
    auto agent = make_agent(AgentKind::kGreedy, ep, 2);
    run_episode(ep, *agent);
    EXPECT_EQ(ep.status(), EpisodeStatus::kAnswered);
    EXPECT_GE(ep.trajectory().metadata.score, 0.5);
}

TEST(Greedy, SeesNoGroundTruth) {
    // Two episodes over the same tiles but different shuffles end in the same
    // picture, so the agent cannot be reading anything but pixels.
    Episode a = new_episode(diagonal_image(60, 60), 2, {}, 1);
    Episode b = new_episode(diagonal_image(60, 60), 2, {}, 2);
    GreedyEdgeAgent ga;
    GreedyEdgeAgent gb;
    run_episode(a, ga);
    run_episode(b, gb);
    const auto final_image = [](const Episode& ep) {
        const auto& names = *ep.trajectory().metadata.answer;
        std::vector<Label> slots;
        for (const auto& n : names) slots.push_back(parse_label_name(n));
        return compose_state_image(ep.labeled_tiles(), Arrangement(slots));
    };
    EXPECT_EQ(final_image(a), final_image(b));
}
