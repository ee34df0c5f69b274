#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "jigsaw/action.hpp"
#include "jigsaw/image.hpp"
#include "jigsaw/perm.hpp"
#include "jigsaw/reward.hpp"
#include "jigsaw/trajectory.hpp"

namespace jigsaw {

enum class StepStatus { kContinue, kError, kDone, kTruncated };

std::string_view to_string(StepStatus status);

using NamedImage = std::pair<std::string, Image>;

struct StepOutcome {
    // kError marks a turn whose code failed; the episode keeps running.
    StepStatus status = StepStatus::kContinue;
    std::string feedback_text;
    std::vector<NamedImage> new_images;
    std::optional<RewardBreakdown> reward;  // set iff kDone or kTruncated
};

struct Grade {
    int acc = 0;
    double score = 0.0;
};

struct EpisodeParams {
    int m = 2;
    DifficultyLevel level;
    std::uint64_t seed = 0;
    EnvConfig config;
    std::string source_image_id;
};

// One rollout of the interactive jigsaw. The shuffled tiles are labelled
// A, B, ... in their initial slot order, so the initial state is always the
// identity over labels and the ground truth is the inverse shuffle.
class Episode {
public:
    Episode(const Image& source, const EpisodeParams& params);

    // Appends the assistant turn and advances the episode. Execution problems
    // become "Error: ..." feedback; only a terminal episode throws
    // (kEpisodeFinished), and an overlapping call throws kBusy.
    StepOutcome step(std::string_view assistant_text);

    // Runs one statement against the registry. Throws Error on failure and
    // leaves the state unchanged in that case.
    std::string execute_statement(const Statement& stmt, std::vector<NamedImage>& new_images);

    [[nodiscard]] Grade grade_answer(const Arrangement& answer) const;

    void abort();

    [[nodiscard]] int m() const noexcept { return params_.m; }
    [[nodiscard]] std::size_t tile_count() const noexcept { return gt_.size(); }
    [[nodiscard]] const EpisodeParams& params() const noexcept { return params_; }
    [[nodiscard]] const Arrangement& ground_truth() const noexcept { return gt_; }
    [[nodiscard]] const Arrangement& state() const noexcept { return state_; }
    [[nodiscard]] const TileSet& labeled_tiles() const noexcept { return labeled_; }
    [[nodiscard]] const std::map<std::string, Image>& registry() const noexcept {
        return registry_;
    }
    [[nodiscard]] int turn() const noexcept { return turn_; }
    [[nodiscard]] int max_turns() const noexcept { return params_.config.max_turns; }
    [[nodiscard]] EpisodeStatus status() const noexcept { return traj_.status; }
    [[nodiscard]] const Trajectory& trajectory() const noexcept { return traj_; }
    [[nodiscard]] const std::string& system_prompt() const { return traj_.messages[0].text; }
    [[nodiscard]] const std::string& user_prompt() const { return traj_.messages[1].text; }
    // Label images as shown to the agent (after the feedback size cap).
    [[nodiscard]] std::vector<NamedImage> tile_images() const;

private:
    struct StepFlag {
        std::atomic<bool> busy{false};
        StepFlag() = default;
        StepFlag(const StepFlag&) noexcept {}
        StepFlag& operator=(const StepFlag&) noexcept { return *this; }
    };

    StepOutcome step_locked(std::string_view assistant_text);
    StepOutcome finish_with_answer(const TaggedResponse& tags, bool code_ignored);
    RewardBreakdown compute_reward(int r_acc) const;
    void register_image(const std::string& name, Image img, std::vector<NamedImage>& new_images);

    EpisodeParams params_;
    Arrangement gt_;
    Arrangement state_;
    TileSet labeled_;
    std::map<std::string, Image> registry_;
    std::map<std::string, NormalizedBox> boxes_;
    int turn_ = 0;
    int swaps_executed_ = 0;
    Trajectory traj_;
    StepFlag step_flag_;
};

Episode new_episode(const Image& source, int m, DifficultyLevel level, std::uint64_t seed,
                    const EnvConfig& config = {}, std::string source_image_id = "");

}  // namespace jigsaw
