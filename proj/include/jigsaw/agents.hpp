#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jigsaw/env.hpp"
#include "jigsaw/perm.hpp"
#include "jigsaw/rng.hpp"

namespace jigsaw {

// Everything a non-privileged agent may look at. There is no ground truth here.
struct AgentView {
    int m = 0;
    std::vector<NamedImage> tiles;
    Arrangement state = Arrangement::identity(4);
    int turn = 0;
    int max_turns = 0;
    std::string last_feedback;
};

AgentView view_of(const Episode& ep, std::string last_feedback = "");

class Agent {
public:
    virtual ~Agent() = default;
    [[nodiscard]] virtual std::string_view name() const = 0;
    // Returns the next assistant message; must be well tagged.
    virtual std::string act(const AgentView& view) = 0;
};

enum class AgentKind { kRandom, kOracle, kGreedy };

AgentKind agent_kind_from_string(std::string_view name);
std::string_view to_string(AgentKind kind);

// Answers a uniformly random arrangement on its first turn.
class RandomAgent final : public Agent {
public:
    explicit RandomAgent(std::uint64_t seed) : rng_(seed) {}
    [[nodiscard]] std::string_view name() const override { return "random"; }
    std::string act(const AgentView& view) override;

private:
    Rng rng_;
};

// Privileged test agent: one observation turn, then one swap per turn along a
// minimum transposition sequence, then the answer.
class OracleAgent final : public Agent {
public:
    explicit OracleAgent(Arrangement gt) : gt_(std::move(gt)) {}
    [[nodiscard]] std::string_view name() const override { return "oracle"; }
    std::string act(const AgentView& view) override;

private:
    Arrangement gt_;
    bool observed_ = false;
};

struct GreedyConfig {
    // Exhaustive search up to this many tiles (9 covers 3x3), beam search above.
    std::size_t exhaustive_max_tiles = 9;
    std::size_t beam_width = 256;
};

// Pairwise edge costs between labelled tiles: right[a][b] is the cost of b
// sitting immediately right of a, down[a][b] of b sitting immediately below a.
struct EdgeCostTable {
    std::size_t n = 0;
    int m = 0;
    std::vector<double> right;
    std::vector<double> down;

    [[nodiscard]] double h(Label a, Label b) const {
        return right[static_cast<std::size_t>(a) * n + static_cast<std::size_t>(b)];
    }
    [[nodiscard]] double v(Label a, Label b) const {
        return down[static_cast<std::size_t>(a) * n + static_cast<std::size_t>(b)];
    }
};

EdgeCostTable edge_cost_table(const std::vector<NamedImage>& tiles, int m);

// Sum of edge costs over all interior adjacencies of the layout.
double layout_cost(const EdgeCostTable& table, const Arrangement& layout);

// Lowest-cost layout; ties go to the lexicographically smallest slot vector.
Arrangement best_layout_exhaustive(const EdgeCostTable& table);
Arrangement best_layout_beam(const EdgeCostTable& table, std::size_t width);

// Uses only tile pixels. Emits one code turn with every swap toward its best
// layout plus an observation, then answers.
class GreedyEdgeAgent final : public Agent {
public:
    explicit GreedyEdgeAgent(GreedyConfig cfg = {}) : cfg_(cfg) {}
    [[nodiscard]] std::string_view name() const override { return "greedy"; }
    std::string act(const AgentView& view) override;

private:
    GreedyConfig cfg_;
    std::optional<Arrangement> target_;
};

// The oracle reads the episode's ground truth; the others never see it.
std::unique_ptr<Agent> make_agent(AgentKind kind, const Episode& ep, std::uint64_t seed,
                                  const GreedyConfig& greedy = {});

// Drives the episode until it leaves the running state.
void run_episode(Episode& ep, Agent& agent);

}  // namespace jigsaw
