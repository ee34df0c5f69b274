#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "jigsaw/agents.hpp"
#include "jigsaw/dataset.hpp"
#include "jigsaw/trajectory.hpp"

namespace jigsaw {

struct EvalRecord {
    int m = 0;
    int level = 0;
    std::size_t episodes = 0;
    double acc = 0.0;
    double score = 0.0;
    double mean_steps = 0.0;
    double ci95_acc = 0.0;  // normal-approximation half-width

    bool operator==(const EvalRecord&) const = default;
};

struct EpisodeResult {
    std::size_t index = 0;  // manifest position
    int m = 0;
    int level = 0;
    int acc = 0;
    double score = 0.0;
    int step_num = 0;
};

struct EvalOptions {
    AgentKind agent = AgentKind::kRandom;
    std::uint64_t agent_seed = 0;
    EnvConfig env;  // max_turns is the turn limit T
    GreedyConfig greedy;
    int jobs = 1;
    // Called once per finished episode, possibly from worker threads.
    std::function<void(std::size_t index, const Trajectory&)> on_trajectory;
};

// One episode per manifest entry; results are in manifest order regardless
// of the number of jobs.
std::vector<EpisodeResult> run_manifest(const DatasetManifest& manifest, const EvalOptions& opts);

// Groups by (m, level) in ascending order.
std::vector<EvalRecord> aggregate(const std::vector<EpisodeResult>& results);

std::vector<EvalRecord> evaluate(const DatasetManifest& manifest, const EvalOptions& opts);

// Unweighted mean over the levels present for grid order m.
struct AvgRow {
    double acc = 0.0;
    double score = 0.0;
};
AvgRow level_average(const std::vector<EvalRecord>& records, int m);

struct Report {
    std::string csv;   // m,level,episodes,acc,score,mean_steps,ci95_acc
    std::string text;  // Acc and Score tables, columns L0.. then Avg
};

Report emit_report(const std::vector<EvalRecord>& records, const std::string& row_label = "");

}  // namespace jigsaw
