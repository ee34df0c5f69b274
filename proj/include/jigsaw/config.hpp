#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "jigsaw/agents.hpp"
#include "jigsaw/dataset.hpp"
#include "jigsaw/grpo.hpp"
#include "jigsaw/server.hpp"
#include "jigsaw/trajectory.hpp"

namespace jigsaw {

// Every tunable in one declarative document. Keys may be omitted (defaults
// apply) but unknown keys are rejected at every level.
struct RunConfig {
    std::optional<std::uint64_t> seed;
    EnvConfig env;  // includes the reward coefficients
    GrpoConfig grpo;
    int group_size = 8;
    BalanceFilterConfig filter;
    GreedyConfig greedy;
    ServerConfig server;
    int jobs = 1;

    void validate() const;
};

nlohmann::json run_config_to_json(const RunConfig& cfg);
// Starts from `base` and overrides whatever `j` names.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path);

std::string_view to_string(AdvantageNorm norm);
AdvantageNorm advantage_norm_from_string(std::string_view text);
ActionKind action_kind_from_string(std::string_view text);

}  // namespace jigsaw
