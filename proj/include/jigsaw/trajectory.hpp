#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jigsaw/image.hpp"
#include "jigsaw/reward.hpp"

namespace jigsaw {

inline constexpr int kTrajectorySchemaVersion = 1;

enum class Role { kSystem, kUser, kAssistant, kEnvironment };
enum class EpisodeStatus { kRunning, kAnswered, kTruncated, kAborted };
enum class StepCountMode { kCodeTurns, kSwapStatements };

std::string_view to_string(Role role);
std::string_view to_string(EpisodeStatus status);
std::string_view to_string(StepCountMode mode);
Role role_from_string(std::string_view text);
EpisodeStatus status_from_string(std::string_view text);
StepCountMode step_count_mode_from_string(std::string_view text);

struct Message {
    Role role = Role::kUser;
    std::string text;
    std::vector<std::string> image_refs;

    bool operator==(const Message&) const = default;
};

struct EnvConfig {
    int max_turns = 5;
    int feedback_max_side = 1024;
    int zoom_max_side = 8192;
    StepCountMode step_count_mode = StepCountMode::kCodeTurns;
    RewardConfig reward;

    void validate() const;
    // Reward settings used inside an episode: step_max follows max_turns.
    [[nodiscard]] RewardConfig episode_reward() const;
    bool operator==(const EnvConfig&) const = default;
};

nlohmann::json env_config_to_json(const EnvConfig& cfg);
EnvConfig env_config_from_json(const nlohmann::json& j);
nlohmann::json reward_config_to_json(const RewardConfig& cfg);
RewardConfig reward_config_from_json(const nlohmann::json& j);
nlohmann::json reward_to_json(const RewardBreakdown& r);
RewardBreakdown reward_from_json(const nlohmann::json& j);

struct TrajectoryMetadata {
    int m = 0;
    int level = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> gt_labels;
    std::string source_image_id;
    EnvConfig config;
    std::optional<std::vector<std::string>> answer;
    double score = 0.0;

    bool operator==(const TrajectoryMetadata&) const = default;
};

struct Trajectory {
    std::vector<Message> messages;
    TrajectoryMetadata metadata;
    std::optional<RewardBreakdown> reward;
    int executed_turns = 0;
    EpisodeStatus status = EpisodeStatus::kRunning;
    // Every image referenced by a message, keyed by identifier, plus "source".
    std::map<std::string, Image> images;
};

nlohmann::json trajectory_to_json(const Trajectory& traj);
// Images are not part of the JSON document; they are left empty.
Trajectory trajectory_from_json(const nlohmann::json& j);

// Writes trajectory.json plus one <identifier>.png per image into `dir`.
void save_trajectory(const std::filesystem::path& dir, const Trajectory& traj);
// Throws Error(kSchema) on malformed documents or missing PNG siblings.
Trajectory load_trajectory(const std::filesystem::path& dir);

inline constexpr const char* kTrajectoryFile = "trajectory.json";
inline constexpr const char* kSourceImageName = "source";

}  // namespace jigsaw
