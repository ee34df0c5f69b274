#include "jigsaw/agents.hpp"

#include <algorithm>
#include <limits>

#include "jigsaw/action.hpp"
#include "jigsaw/error.hpp"

namespace jigsaw {

namespace {

std::string answer_turn(std::string_view thought, const Arrangement& layout) {
    return "<think>" + std::string(thought) + "</think>\n<answer>" + layout.to_literal() +
           "</answer>";
}

std::string code_turn(std::string_view thought, const ActionProgram& program) {
    return "<think>" + std::string(thought) + "</think>\n<code>\n" + render_program(program) +
           "\n</code>";
}

SwapStmt swap_stmt(std::pair<std::size_t, std::size_t> s) {
    return SwapStmt{static_cast<int>(s.first), static_cast<int>(s.second)};
}

}  // namespace

AgentView view_of(const Episode& ep, std::string last_feedback) {
    AgentView v;
    v.m = ep.m();
    v.tiles = ep.tile_images();
    v.state = ep.state();
    v.turn = ep.turn();
    v.max_turns = ep.max_turns();
    v.last_feedback = std::move(last_feedback);
    return v;
}

AgentKind agent_kind_from_string(std::string_view name) {
    if (name == "random") return AgentKind::kRandom;
    if (name == "oracle") return AgentKind::kOracle;
    if (name == "greedy") return AgentKind::kGreedy;
    throw Error(ErrorCode::kUnknownAgent,
                "unknown agent '" + std::string(name) + "' (expected random, oracle or greedy)");
}

std::string_view to_string(AgentKind kind) {
    switch (kind) {
        case AgentKind::kRandom: return "random";
        case AgentKind::kOracle: return "oracle";
        case AgentKind::kGreedy: return "greedy";
    }
    return "?";
}

std::string RandomAgent::act(const AgentView& view) {
    const Arrangement guess = sample_uniform(view.state.size(), rng_);
    return answer_turn("Guessing a layout at random.", guess);
}

std::string OracleAgent::act(const AgentView& view) {
    if (!observed_) {
        observed_ = true;
        ActionProgram p;
        p.statements.emplace_back(ObserveStmt{"observation_image_1"});
        return code_turn("Look at the current layout first.", p);
    }
    const auto plan = swap_plan(view.state, gt_);
    if (plan.empty()) return answer_turn("Every piece is in place.", gt_);
    ActionProgram p;
    p.statements.emplace_back(swap_stmt(plan.front()));
    return code_turn("Move one misplaced piece into its slot.", p);
}

EdgeCostTable edge_cost_table(const std::vector<NamedImage>& tiles, int m) {
    EdgeCostTable t;
    t.n = tiles.size();
    t.m = m;
    if (t.n != static_cast<std::size_t>(m * m)) {
        throw Error(ErrorCode::kSizeMismatch, "tile count does not match the grid");
    }
    t.right.assign(t.n * t.n, 0.0);
    t.down.assign(t.n * t.n, 0.0);
    for (std::size_t a = 0; a < t.n; ++a) {
        for (std::size_t b = 0; b < t.n; ++b) {
            if (a == b) continue;
            t.right[a * t.n + b] =
                edge_dissimilarity(tiles[a].second, tiles[b].second, EdgeSide::kRightToLeft);
            t.down[a * t.n + b] =
                edge_dissimilarity(tiles[a].second, tiles[b].second, EdgeSide::kBottomToTop);
        }
    }
    return t;
}

namespace {

double cost_of(const EdgeCostTable& t, const std::vector<Label>& slots) {
    const int m = t.m;
    double c = 0.0;
    for (int r = 0; r < m; ++r) {
        for (int col = 0; col < m; ++col) {
            const Label here = slots[static_cast<std::size_t>(r * m + col)];
            if (col + 1 < m) c += t.h(here, slots[static_cast<std::size_t>(r * m + col + 1)]);
            if (r + 1 < m) c += t.v(here, slots[static_cast<std::size_t>((r + 1) * m + col)]);
        }
    }
    return c;
}

}  // namespace

double layout_cost(const EdgeCostTable& table, const Arrangement& layout) {
    if (layout.size() != table.n) throw Error(ErrorCode::kSizeMismatch, "layout size mismatch");
    return cost_of(table, layout.slots());
}

Arrangement best_layout_exhaustive(const EdgeCostTable& table) {
    std::vector<Label> slots(table.n);
    for (std::size_t k = 0; k < table.n; ++k) slots[k] = static_cast<Label>(k);
    std::vector<Label> best = slots;
    double best_cost = std::numeric_limits<double>::infinity();
    // next_permutation walks lexicographic order, so strict < keeps the
    // smallest layout among ties.
    do {
        const double c = cost_of(table, slots);
        if (c < best_cost) {
            best_cost = c;
            best = slots;
        }
    } while (std::next_permutation(slots.begin(), slots.end()));
    return Arrangement(std::move(best));
}

Arrangement best_layout_beam(const EdgeCostTable& table, std::size_t width) {
    struct Partial {
        std::vector<Label> slots;
        double cost = 0.0;
    };
    const int m = table.m;
    const auto better = [](const Partial& a, const Partial& b) {
        return a.cost < b.cost || (a.cost == b.cost && a.slots < b.slots);
    };
    std::vector<Partial> beam{Partial{}};
    for (std::size_t pos = 0; pos < table.n; ++pos) {
        const int r = static_cast<int>(pos) / m;
        const int col = static_cast<int>(pos) % m;
        std::vector<Partial> next;
        for (const Partial& p : beam) {
            for (std::size_t label = 0; label < table.n; ++label) {
                const auto l = static_cast<Label>(label);
                if (std::find(p.slots.begin(), p.slots.end(), l) != p.slots.end()) continue;
                Partial q = p;
                if (col > 0) q.cost += table.h(q.slots[pos - 1], l);
                if (r > 0) q.cost += table.v(q.slots[pos - static_cast<std::size_t>(m)], l);
                q.slots.push_back(l);
                next.push_back(std::move(q));
            }
        }
        std::sort(next.begin(), next.end(), better);
        if (next.size() > std::max<std::size_t>(width, 1)) next.resize(std::max<std::size_t>(width, 1));
        beam = std::move(next);
    }
    return Arrangement(beam.front().slots);
}

std::string GreedyEdgeAgent::act(const AgentView& view) {
    if (target_) return answer_turn("The layout with the smoothest seams is final.", *target_);
    const EdgeCostTable table = edge_cost_table(view.tiles, view.m);
    target_ = table.n <= cfg_.exhaustive_max_tiles ? best_layout_exhaustive(table)
                                                   : best_layout_beam(table, cfg_.beam_width);
    ActionProgram p;
    for (const auto& s : swap_plan(view.state, *target_)) p.statements.emplace_back(swap_stmt(s));
    p.statements.emplace_back(ObserveStmt{"observation_image_1"});
    return code_turn("Arrange the pieces so neighbouring edges match, then check the result.", p);
}

std::unique_ptr<Agent> make_agent(AgentKind kind, const Episode& ep, std::uint64_t seed,
                                  const GreedyConfig& greedy) {
    switch (kind) {
        case AgentKind::kRandom: return std::make_unique<RandomAgent>(seed);
        case AgentKind::kOracle: return std::make_unique<OracleAgent>(ep.ground_truth());
        case AgentKind::kGreedy: return std::make_unique<GreedyEdgeAgent>(greedy);
    }
    throw Error(ErrorCode::kUnknownAgent, "unknown agent kind");
}

void run_episode(Episode& ep, Agent& agent) {
    std::string feedback;
    while (ep.status() == EpisodeStatus::kRunning) {
        const StepOutcome out = ep.step(agent.act(view_of(ep, feedback)));
        feedback = out.feedback_text;
    }
}

}  // namespace jigsaw
