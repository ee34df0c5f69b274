#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jigsaw/action.hpp"
#include "jigsaw/trajectory.hpp"

namespace jigsaw {

// Splits `total` into integer shares proportional to `weights` by the
// largest-remainder method; ties in the remainder go to the lower index.
std::vector<std::size_t> largest_remainder(std::size_t total, const std::vector<double>& weights);

struct ManifestEntry {
    std::string image_path;
    int m = 2;
    int level = 0;
    std::uint64_t seed = 0;
    std::string category_tag;

    bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;

    // Category fractions of the entries.
    [[nodiscard]] std::map<std::string, double> mixture() const;
};

nlohmann::json manifest_entry_to_json(const ManifestEntry& e);
ManifestEntry manifest_entry_from_json(const nlohmann::json& j);
// One compact JSON object per line.
std::string manifest_to_jsonl(const DatasetManifest& manifest);
DatasetManifest manifest_from_jsonl(std::string_view text);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

inline constexpr const char* kUncategorized = "uncategorized";

struct CorpusImage {
    std::string path;
    std::string category;
};

// Every *.png under `dir`, sorted by path. The category is the first
// directory component below `dir`.
std::vector<CorpusImage> list_corpus(const std::filesystem::path& dir);

struct SynthesisConfig {
    int m = 2;
    std::vector<int> levels;  // empty means 0..m*m-2
    int per_level_count = 1;
    std::uint64_t seed = 0;
    // Target category fractions; empty means the corpus proportions.
    std::map<std::string, double> mixture;
};

struct SynthesisResult {
    DatasetManifest manifest;
    std::vector<std::string> warnings;  // skipped files and similar
};

std::vector<int> default_levels(int m);

// Each level receives (usable images) * per_level_count entries, split across
// categories by largest remainder of the mixture; categories with too few
// images are cycled. Throws kEmptyCorpus when nothing decodes.
SynthesisResult synthesize_puzzles(const std::filesystem::path& image_dir,
                                   const SynthesisConfig& cfg);

// ─── Trajectory filtering ──────────────────────────────────────

enum class ActionKind { kSwap, kObserve, kCrop, kZoom };
std::string_view to_string(ActionKind kind);

struct BalanceFilterConfig {
    int step_min = 4;
    int step_max_keep = 8;
    std::vector<ActionKind> required_action_kinds{ActionKind::kSwap, ActionKind::kObserve,
                                                  ActionKind::kCrop, ActionKind::kZoom};
    double min_kind_fraction = 0.1;

    void validate() const;
};

// Kinds of statements that appear in the trajectory's assistant code blocks.
std::vector<ActionKind> action_kinds(const Trajectory& traj);

struct FilterResult {
    std::vector<std::size_t> kept;
    std::vector<std::pair<std::size_t, std::string>> rejected;
    std::map<ActionKind, double> kind_coverage;  // fraction of kept containing each kind
    std::vector<std::string> warnings;
};

FilterResult filter_trajectories(const std::vector<Trajectory>& trajs,
                                 const BalanceFilterConfig& cfg);

// ─── Replay validation ─────────────────────────────────────────

struct ReplayReport {
    std::vector<std::string> divergences;
    std::vector<std::string> format_notes;  // tagging problems per assistant turn
    std::optional<RewardBreakdown> recomputed;

    [[nodiscard]] bool clean() const noexcept { return divergences.empty(); }
};

// Rebuilds the episode from metadata and the stored source image, replays
// every assistant turn and compares messages, images, status and reward.
ReplayReport replay_trajectory(const Trajectory& traj);

// load_trajectory + replay_trajectory. Throws Error(kSchema) on load problems.
ReplayReport validate_trajectory(const std::filesystem::path& dir);

}  // namespace jigsaw
