#include "jigsaw/trajectory.hpp"

#include <array>
#include <set>

#include "jigsaw/codec.hpp"
#include "jigsaw/error.hpp"

namespace jigsaw {

using nlohmann::json;

namespace {

template <typename E, std::size_t N>
E lookup(const std::array<std::pair<std::string_view, E>, N>& table, std::string_view text,
         std::string_view what) {
    for (const auto& [name, value] : table) {
        if (name == text) return value;
    }
    throw Error(ErrorCode::kSchema, "unknown " + std::string(what) + " '" + std::string(text) + "'");
}

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<std::string_view, E>, N>& table, E value) {
    for (const auto& [name, v] : table) {
        if (v == value) return name;
    }
    return "?";
}

constexpr std::array<std::pair<std::string_view, Role>, 4> kRoles{{
    {"system", Role::kSystem},
    {"user", Role::kUser},
    {"assistant", Role::kAssistant},
    {"environment", Role::kEnvironment},
}};

constexpr std::array<std::pair<std::string_view, EpisodeStatus>, 4> kStatuses{{
    {"running", EpisodeStatus::kRunning},
    {"answered", EpisodeStatus::kAnswered},
    {"truncated", EpisodeStatus::kTruncated},
    {"aborted", EpisodeStatus::kAborted},
}};

constexpr std::array<std::pair<std::string_view, StepCountMode>, 2> kModes{{
    {"code_turns", StepCountMode::kCodeTurns},
    {"swap_statements", StepCountMode::kSwapStatements},
}};

void require_keys(const json& j, std::initializer_list<std::string_view> allowed,
                  std::string_view where) {
    if (!j.is_object()) throw Error(ErrorCode::kSchema, std::string(where) + " must be an object");
    const std::set<std::string_view> names(allowed);
    for (const auto& [key, _] : j.items()) {
        if (!names.contains(key)) {
            throw Error(ErrorCode::kSchema,
                        "unknown key '" + key + "' in " + std::string(where));
        }
    }
    for (std::string_view key : allowed) {
        if (!j.contains(std::string(key))) {
            throw Error(ErrorCode::kSchema,
                        "missing key '" + std::string(key) + "' in " + std::string(where));
        }
    }
}

// Field access that reports schema problems as Error(kSchema).
template <typename T>
T field(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::kSchema, std::string("field '") + key + "': " + e.what());
    }
}

}  // namespace

std::string_view to_string(Role role) { return name_of(kRoles, role); }
std::string_view to_string(EpisodeStatus status) { return name_of(kStatuses, status); }
std::string_view to_string(StepCountMode mode) { return name_of(kModes, mode); }
Role role_from_string(std::string_view text) { return lookup(kRoles, text, "role"); }
EpisodeStatus status_from_string(std::string_view text) {
    return lookup(kStatuses, text, "status");
}
StepCountMode step_count_mode_from_string(std::string_view text) {
    return lookup(kModes, text, "step_count_mode");
}

void EnvConfig::validate() const {
    if (max_turns < 1) throw Error(ErrorCode::kInvalidConfig, "max_turns must be >= 1");
    if (feedback_max_side < 1) {
        throw Error(ErrorCode::kInvalidConfig, "feedback_max_side must be >= 1");
    }
    if (zoom_max_side < 1) throw Error(ErrorCode::kInvalidConfig, "zoom_max_side must be >= 1");
    reward.validate();
}

RewardConfig EnvConfig::episode_reward() const {
    RewardConfig r = reward;
    r.step_max = max_turns;
    return r;
}

json reward_config_to_json(const RewardConfig& cfg) {
    return json{{"alpha", cfg.alpha},
                {"beta_fmt", cfg.beta_fmt},
                {"gamma", cfg.gamma},
                {"lambda", cfg.lambda},
                {"step_max", cfg.step_max}};
}

RewardConfig reward_config_from_json(const json& j) {
    require_keys(j, {"alpha", "beta_fmt", "gamma", "lambda", "step_max"}, "reward config");
    RewardConfig cfg;
    cfg.alpha = field<double>(j, "alpha");
    cfg.beta_fmt = field<double>(j, "beta_fmt");
    cfg.gamma = field<double>(j, "gamma");
    cfg.lambda = field<double>(j, "lambda");
    cfg.step_max = field<int>(j, "step_max");
    return cfg;
}

json env_config_to_json(const EnvConfig& cfg) {
    return json{{"max_turns", cfg.max_turns},
                {"feedback_max_side", cfg.feedback_max_side},
                {"zoom_max_side", cfg.zoom_max_side},
                {"step_count_mode", std::string(to_string(cfg.step_count_mode))},
                {"reward", reward_config_to_json(cfg.reward)}};
}

EnvConfig env_config_from_json(const json& j) {
    require_keys(j, {"max_turns", "feedback_max_side", "zoom_max_side", "step_count_mode", "reward"},
                 "env config");
    EnvConfig cfg;
    cfg.max_turns = field<int>(j, "max_turns");
    cfg.feedback_max_side = field<int>(j, "feedback_max_side");
    cfg.zoom_max_side = field<int>(j, "zoom_max_side");
    cfg.step_count_mode = step_count_mode_from_string(field<std::string>(j, "step_count_mode"));
    cfg.reward = reward_config_from_json(j.at("reward"));
    return cfg;
}

json reward_to_json(const RewardBreakdown& r) {
    return json{{"r_acc", r.r_acc},
                {"r_format", r.r_format},
                {"r_step", r.r_step},
                {"total", r.total},
                {"step_num", r.step_num}};
}

RewardBreakdown reward_from_json(const json& j) {
    require_keys(j, {"r_acc", "r_format", "r_step", "total", "step_num"}, "reward");
    RewardBreakdown r;
    r.r_acc = field<int>(j, "r_acc");
    r.r_format = field<int>(j, "r_format");
    r.r_step = field<double>(j, "r_step");
    r.total = field<double>(j, "total");
    r.step_num = field<int>(j, "step_num");
    return r;
}

json trajectory_to_json(const Trajectory& traj) {
    json messages = json::array();
    for (const Message& msg : traj.messages) {
        messages.push_back(json{{"role", std::string(to_string(msg.role))},
                                {"text", msg.text},
                                {"image_refs", msg.image_refs}});
    }
    const TrajectoryMetadata& md = traj.metadata;
    json metadata{{"m", md.m},
                  {"level", md.level},
                  {"seed", md.seed},
                  {"gt_labels", md.gt_labels},
                  {"source_image_id", md.source_image_id},
                  {"config", env_config_to_json(md.config)},
                  {"status", std::string(to_string(traj.status))},
                  {"answer", md.answer ? json(*md.answer) : json(nullptr)},
                  {"score", md.score}};
    return json{{"schema_version", kTrajectorySchemaVersion},
                {"messages", std::move(messages)},
                {"metadata", std::move(metadata)},
                {"reward", traj.reward ? reward_to_json(*traj.reward) : json(nullptr)},
                {"executed_turns", traj.executed_turns}};
}

Trajectory trajectory_from_json(const json& j) {
    require_keys(j, {"schema_version", "messages", "metadata", "reward", "executed_turns"},
                 "trajectory");
    if (field<int>(j, "schema_version") != kTrajectorySchemaVersion) {
        throw Error(ErrorCode::kSchema, "unsupported schema_version");
    }
    Trajectory traj;
    if (!j.at("messages").is_array()) throw Error(ErrorCode::kSchema, "messages must be an array");
    for (const json& m : j.at("messages")) {
        require_keys(m, {"role", "text", "image_refs"}, "message");
        traj.messages.push_back(Message{role_from_string(field<std::string>(m, "role")),
                                        field<std::string>(m, "text"),
                                        field<std::vector<std::string>>(m, "image_refs")});
    }
    const json& md = j.at("metadata");
    require_keys(md, {"m", "level", "seed", "gt_labels", "source_image_id", "config", "status",
                      "answer", "score"},
                 "metadata");
    TrajectoryMetadata& meta = traj.metadata;
    meta.m = field<int>(md, "m");
    meta.level = field<int>(md, "level");
    meta.seed = field<std::uint64_t>(md, "seed");
    meta.gt_labels = field<std::vector<std::string>>(md, "gt_labels");
    meta.source_image_id = field<std::string>(md, "source_image_id");
    meta.config = env_config_from_json(md.at("config"));
    traj.status = status_from_string(field<std::string>(md, "status"));
    if (!md.at("answer").is_null()) meta.answer = field<std::vector<std::string>>(md, "answer");
    meta.score = field<double>(md, "score");
    if (!j.at("reward").is_null()) traj.reward = reward_from_json(j.at("reward"));
    traj.executed_turns = field<int>(j, "executed_turns");
    return traj;
}

void save_trajectory(const std::filesystem::path& dir, const Trajectory& traj) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, img] : traj.images) write_png(dir / (name + ".png"), img);
    write_file_atomic(dir / kTrajectoryFile, trajectory_to_json(traj).dump(2) + "\n");
}

Trajectory load_trajectory(const std::filesystem::path& dir) {
    json doc;
    try {
        doc = json::parse(read_file(dir / kTrajectoryFile));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::kSchema, std::string("trajectory.json: ") + e.what());
    } catch (const Error& e) {
        throw Error(ErrorCode::kSchema, e.what());
    }
    Trajectory traj = trajectory_from_json(doc);
    std::set<std::string> names{kSourceImageName};
    for (const Message& msg : traj.messages) names.insert(msg.image_refs.begin(), msg.image_refs.end());
    for (const std::string& name : names) {
        const auto path = dir / (name + ".png");
        if (!std::filesystem::exists(path)) {
            throw Error(ErrorCode::kSchema, "missing image file " + path.filename().string());
        }
        traj.images.emplace(name, read_png(path));
    }
    return traj;
}

}  // namespace jigsaw
