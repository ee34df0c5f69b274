#include <algorithm>
#include <deque>
#include <map>
#include <numeric>
#include <set>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include "jigsaw/error.hpp"
#include "jigsaw/perm.hpp"
#include "test_support.hpp"

using namespace jigsaw;
using jigsaw::testing::derangements_inclusion_exclusion;

namespace {

double chi_square_p(const std::map<std::vector<Label>, int>& counts, std::size_t categories,
                    int samples) {
    const double expected = static_cast<double>(samples) / static_cast<double>(categories);
    double stat = 0.0;
    for (const auto& [key, c] : counts) stat += (c - expected) * (c - expected) / expected;
    stat += static_cast<double>(categories - counts.size()) * expected;  // unseen cells
    const boost::math::chi_squared dist(static_cast<double>(categories - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

// Breadth-first search over slot transpositions from `start`; returns the
// distance of every reachable arrangement.
std::map<std::vector<Label>, int> bfs_distances(const std::vector<Label>& start) {
    std::map<std::vector<Label>, int> dist{{start, 0}};
    std::deque<std::vector<Label>> queue{start};
    const std::size_t n = start.size();
    while (!queue.empty()) {
        const auto cur = queue.front();
        queue.pop_front();
        const int d = dist[cur];
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                auto next = cur;
                std::swap(next[i], next[j]);
                if (dist.emplace(next, d + 1).second) queue.push_back(std::move(next));
            }
        }
    }
    return dist;
}

}  // namespace

TEST(Labels, NamesRoundTrip) {
    for (Label l = 0; l < 25; ++l) EXPECT_EQ(parse_label_name(label_name(l)), l);
    EXPECT_EQ(label_name(0), "A");
    EXPECT_EQ(parse_label_name("a"), -1);
    EXPECT_EQ(parse_label_name("AB"), -1);
    EXPECT_EQ(parse_label_name("Z"), -1);
}

TEST(Arrangement, RejectsNonBijections) {
    EXPECT_THROW(Arrangement({0, 0, 1, 2}), Error);
    EXPECT_THROW(Arrangement({0, 1, 2}), Error);
    EXPECT_FALSE(is_valid_arrangement({0, 1, 2, 4}));
    EXPECT_TRUE(is_valid_arrangement({3, 1, 2, 0}));
}

TEST(Arrangement, InverseAndLiteral) {
    const Arrangement a({1, 2, 0, 3});
    EXPECT_EQ(a.inverse(), Arrangement({2, 0, 1, 3}));
    EXPECT_EQ(a.to_literal(), R"(["B", "C", "A", "D"])");
    EXPECT_EQ(a.slot_of(0), 2u);
    EXPECT_EQ(a.grid_order(), 2);
}

TEST(Derangements, CountMatchesInclusionExclusion) {
    for (int n = 1; n <= 8; ++n) {
        std::vector<Label> p(static_cast<std::size_t>(n));
        std::iota(p.begin(), p.end(), 0);
        std::int64_t count = 0;
        do {
            bool fixed = false;
            for (int i = 0; i < n; ++i) fixed = fixed || p[static_cast<std::size_t>(i)] == i;
            count += fixed ? 0 : 1;
        } while (std::next_permutation(p.begin(), p.end()));
        EXPECT_EQ(count, derangements_inclusion_exclusion(n)) << "n=" << n;
    }
}

TEST(Sampler, ExactFixedPointCount) {
    Rng rng(11);
    for (int m = 2; m <= 5; ++m) {
        const std::size_t n = static_cast<std::size_t>(m * m);
        const Arrangement id = Arrangement::identity(n);
        for (int level = 0; level <= static_cast<int>(n) - 2; ++level) {
            for (int rep = 0; rep < 200; ++rep) {
                const Arrangement a = sample_with_fixed_points(n, level, rng);
                ASSERT_EQ(count_fixed_points(a, id), static_cast<std::size_t>(level));
            }
        }
    }
}

TEST(Sampler, RejectsImpossibleLevels) {
    Rng rng(1);
    for (std::size_t n : {4u, 9u, 16u}) {
        EXPECT_THROW(sample_with_fixed_points(n, static_cast<int>(n) - 1, rng), Error);
        EXPECT_EQ(sample_with_fixed_points(n, static_cast<int>(n), rng), Arrangement::identity(n));
        EXPECT_THROW(sample_with_fixed_points(n, -1, rng), Error);
        try {
            validate_level(n, DifficultyLevel{static_cast<int>(n) - 1});
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::kInvalidLevel);
        }
    }
}

TEST(Sampler, DerangementsUniform) {
    Rng rng(2024);
    for (int n : {3, 4, 5}) {
        std::map<std::vector<Label>, int> counts;
        const int samples = 60000;
        for (int s = 0; s < samples; ++s) {
            auto d = sample_derangement(static_cast<std::size_t>(n), rng);
            for (int i = 0; i < n; ++i) ASSERT_NE(d[static_cast<std::size_t>(i)], i);
            ++counts[d];
        }
        const auto cells = static_cast<std::size_t>(derangements_inclusion_exclusion(n));
        EXPECT_EQ(counts.size(), cells);
        EXPECT_GT(chi_square_p(counts, cells, samples), 0.01) << "n=" << n;
    }
}

TEST(Sampler, FixedSubsetUniform) {
    // Level 2 on 2x2: the two fixed slots form one of C(4,2) = 6 subsets, and
    // the remaining pair must be swapped, so there are exactly 6 outcomes.
    Rng rng(5);
    std::map<std::vector<Label>, int> counts;
    const int samples = 30000;
    for (int s = 0; s < samples; ++s) ++counts[sample_with_fixed_points(4, 2, rng).slots()];
    EXPECT_EQ(counts.size(), 6u);
    EXPECT_GT(chi_square_p(counts, 6, samples), 0.01);
}

TEST(Sampler, UniformOverS4) {
    Rng rng(8);
    std::map<std::vector<Label>, int> counts;
    const int samples = 48000;
    for (int s = 0; s < samples; ++s) ++counts[sample_uniform(4, rng).slots()];
    EXPECT_GT(chi_square_p(counts, 24, samples), 0.01);
}

TEST(Sampler, SeedDeterminism) {
    Rng a(77);
    Rng b(77);
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(sample_with_fixed_points(9, 3, a), sample_with_fixed_points(9, 3, b));
    }
}

TEST(SwapDistance, MatchesBfsOnS4) {
    const auto dist = bfs_distances({0, 1, 2, 3});
    ASSERT_EQ(dist.size(), 24u);
    int worst = 0;
    const Arrangement id = Arrangement::identity(4);
    for (const auto& [slots, d] : dist) {
        EXPECT_EQ(min_swap_distance(Arrangement(slots), id), static_cast<std::size_t>(d));
        worst = std::max(worst, d);
    }
    EXPECT_EQ(worst, 3);
}

TEST(SwapDistance, MatchesBfsOnRandomS9) {
    std::vector<Label> id9(9);
    std::iota(id9.begin(), id9.end(), 0);
    const auto dist = bfs_distances(id9);
    ASSERT_EQ(dist.size(), 362880u);
    Rng rng(3);
    for (int rep = 0; rep < 500; ++rep) {
        const Arrangement state = sample_uniform(9, rng);
        const Arrangement gt = sample_uniform(9, rng);
        // Relabel so the goal is the identity: slot k must end with gt[k].
        std::vector<Label> rel(9);
        for (std::size_t k = 0; k < 9; ++k) rel[k] = static_cast<Label>(gt.slot_of(state[k]));
        EXPECT_EQ(min_swap_distance(state, gt), static_cast<std::size_t>(dist.at(rel)));
    }
}

TEST(SwapPlan, ReachesGoalInMinimumSwaps) {
    Rng rng(9);
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t n = rep % 2 == 0 ? 4 : 9;
        const Arrangement state = sample_uniform(n, rng);
        const Arrangement gt = sample_uniform(n, rng);
        const auto plan = swap_plan(state, gt);
        EXPECT_EQ(plan.size(), min_swap_distance(state, gt));
        Arrangement cur = state;
        for (const auto& [i, j] : plan) cur = apply_swap(cur, i, j);
        EXPECT_EQ(cur, gt);
    }
}

TEST(SwapDistance, CycleIdentity) {
    const Arrangement id = Arrangement::identity(4);
    EXPECT_EQ(cycle_count(id, id), 4u);
    EXPECT_EQ(min_swap_distance(Arrangement({1, 2, 3, 0}), id), 3u);
    EXPECT_EQ(min_swap_distance(Arrangement({1, 0, 3, 2}), id), 2u);
    EXPECT_THROW(apply_swap(id, 0, 4), Error);
}
