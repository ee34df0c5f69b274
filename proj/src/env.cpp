#include "jigsaw/env.hpp"

#include <algorithm>
#include <cassert>

#include "jigsaw/error.hpp"
#include "jigsaw/prompts.hpp"

namespace jigsaw {

namespace {

std::string join_code(const std::vector<std::string>& blocks) {
    std::string out;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        if (k > 0) out += '\n';
        out += blocks[k];
    }
    return out;
}

std::string dims(const Image& img) {
    return std::to_string(img.width) + "x" + std::to_string(img.height);
}

void check_grid(int m) {
    if (m < 2 || m > kMaxGridOrder) {
        throw Error(ErrorCode::kInvalidSize,
                    "grid order must be in 2.." + std::to_string(kMaxGridOrder));
    }
}

struct BusyGuard {
    explicit BusyGuard(std::atomic<bool>& flag) : flag_(flag) {
        if (flag_.exchange(true, std::memory_order_acquire)) {
            throw Error(ErrorCode::kBusy, "episode is already being stepped");
        }
    }
    ~BusyGuard() { flag_.store(false, std::memory_order_release); }
    BusyGuard(const BusyGuard&) = delete;
    BusyGuard& operator=(const BusyGuard&) = delete;

private:
    std::atomic<bool>& flag_;
};

Arrangement shuffle_for(const EpisodeParams& p) {
    check_grid(p.m);
    const auto n = static_cast<std::size_t>(p.m * p.m);
    validate_level(n, p.level);
    Rng rng(p.seed);
    return sample_with_fixed_points(n, p.level.n_correct, rng);
}

}  // namespace

std::string_view to_string(StepStatus status) {
    switch (status) {
        case StepStatus::kContinue: return "continue";
        case StepStatus::kError: return "error";
        case StepStatus::kDone: return "done";
        case StepStatus::kTruncated: return "truncated";
    }
    return "?";
}

Episode::Episode(const Image& source, const EpisodeParams& params)
    : params_(params),
      gt_(shuffle_for(params).inverse()),
      state_(Arrangement::identity(gt_.size())) {
    params_.config.validate();
    if (source.empty()) throw Error(ErrorCode::kEmptyImage, "source image is empty");

    // gt_ is the inverse of the shuffle, so shuffle[label] = gt_.inverse()[label].
    const Arrangement shuffle = gt_.inverse();
    const TileSet truth = split_tiles(resize_to_multiple(source, params_.m), params_.m);
    labeled_ = TileSet{truth.m, truth.tile_w, truth.tile_h, {}};
    labeled_.tiles.reserve(truth.tiles.size());
    for (std::size_t label = 0; label < truth.tiles.size(); ++label) {
        labeled_.tiles.push_back(truth.tiles[static_cast<std::size_t>(shuffle[label])]);
    }

    traj_.metadata.m = params_.m;
    traj_.metadata.level = params_.level.n_correct;
    traj_.metadata.seed = params_.seed;
    traj_.metadata.gt_labels = gt_.label_names();
    traj_.metadata.source_image_id = params_.source_image_id;
    traj_.metadata.config = params_.config;
    traj_.images.emplace(kSourceImageName, source);

    Message user{Role::kUser, jigsaw::user_prompt(params_.m), {}};
    for (std::size_t label = 0; label < labeled_.tiles.size(); ++label) {
        const std::string name = label_name(static_cast<Label>(label));
        registry_.emplace(name, labeled_.tiles[label]);
        traj_.images.emplace(name,
                             cap_longest_side(labeled_.tiles[label], params_.config.feedback_max_side));
        user.image_refs.push_back(name);
    }
    traj_.messages.push_back(Message{Role::kSystem, jigsaw::system_prompt(params_.m), {}});
    traj_.messages.push_back(std::move(user));
}

std::vector<NamedImage> Episode::tile_images() const {
    std::vector<NamedImage> out;
    for (std::size_t label = 0; label < labeled_.tiles.size(); ++label) {
        const std::string name = label_name(static_cast<Label>(label));
        out.emplace_back(name, traj_.images.at(name));
    }
    return out;
}

StepOutcome Episode::step(std::string_view assistant_text) {
    BusyGuard guard(step_flag_.busy);
    return step_locked(assistant_text);
}

void Episode::abort() {
    BusyGuard guard(step_flag_.busy);
    if (traj_.status == EpisodeStatus::kRunning) traj_.status = EpisodeStatus::kAborted;
}

StepOutcome Episode::step_locked(std::string_view assistant_text) {
    if (traj_.status != EpisodeStatus::kRunning) {
        throw Error(ErrorCode::kEpisodeFinished,
                    "episode finished (" + std::string(to_string(traj_.status)) + ")");
    }
    traj_.messages.push_back(Message{Role::kAssistant, std::string(assistant_text), {}});
    const TaggedResponse tags = extract_tags(assistant_text);
    if (tags.has_answer()) return finish_with_answer(tags, tags.has_code());

    StepOutcome out;
    std::vector<std::string> lines;
    ++turn_;
    if (!tags.has_code()) {
        out.status = StepStatus::kError;
        lines.emplace_back("Error: no <code> or <answer> block found.");
    } else {
        try {
            const ActionProgram program = parse_program(join_code(tags.code_blocks));
            for (const Statement& stmt : program.statements) {
                lines.push_back(execute_statement(stmt, out.new_images));
            }
        } catch (const Error& e) {
            out.status = StepStatus::kError;
            lines.push_back(std::string("Error: ") + e.what());
        }
    }
    lines.push_back("Current state: " + state_.to_literal());
    lines.push_back("Turn " + std::to_string(turn_) + " of " + std::to_string(max_turns()) + ".");
    const bool truncated = turn_ >= max_turns();
    if (truncated) lines.emplace_back("Turn limit reached without an answer.");

    for (std::size_t k = 0; k < lines.size(); ++k) {
        if (k > 0) out.feedback_text += '\n';
        out.feedback_text += lines[k];
    }
    Message feedback{Role::kEnvironment, out.feedback_text, {}};
    for (const auto& [name, _] : out.new_images) feedback.image_refs.push_back(name);
    traj_.messages.push_back(std::move(feedback));
    traj_.executed_turns = turn_;

    if (truncated) {
        traj_.status = EpisodeStatus::kTruncated;
        traj_.reward = compute_reward(0);
        out.status = StepStatus::kTruncated;
        out.reward = traj_.reward;
    }
    return out;
}

StepOutcome Episode::finish_with_answer(const TaggedResponse& tags, bool code_ignored) {
    StepOutcome out;
    out.status = StepStatus::kDone;
    int acc = 0;
    try {
        const Arrangement answer = parse_answer(*tags.answer(), tile_count());
        const Grade grade = grade_answer(answer);
        acc = grade.acc;
        traj_.metadata.answer = answer.label_names();
        traj_.metadata.score = grade.score;
        out.feedback_text = "Answer received: " + answer.to_literal() + ".";
    } catch (const Error& e) {
        traj_.metadata.answer.reset();
        traj_.metadata.score = 0.0;
        out.feedback_text = std::string("Error: ") + e.what();
    }
    if (code_ignored) {
        out.feedback_text += "\nWarning: code ignored because the turn also contains an answer.";
    }
    traj_.status = EpisodeStatus::kAnswered;
    traj_.reward = compute_reward(acc);
    out.reward = traj_.reward;
    return out;
}

RewardBreakdown Episode::compute_reward(int r_acc) const {
    const RewardConfig cfg = params_.config.episode_reward();
    const int step_num = params_.config.step_count_mode == StepCountMode::kCodeTurns
                             ? turn_
                             : std::min(swaps_executed_, cfg.step_max);
    return total_reward(r_acc, format_reward(traj_), step_num, cfg);
}

Grade Episode::grade_answer(const Arrangement& answer) const {
    Grade g;
    g.acc = accuracy_reward(answer, gt_);
    g.score = static_cast<double>(count_fixed_points(answer, gt_)) /
              static_cast<double>(gt_.size());
    return g;
}

void Episode::register_image(const std::string& name, Image img,
                             std::vector<NamedImage>& new_images) {
    Image shown = cap_longest_side(img, params_.config.feedback_max_side);
    registry_.insert_or_assign(name, std::move(img));
    traj_.images.insert_or_assign(name, shown);
    new_images.emplace_back(name, std::move(shown));
}

std::string Episode::execute_statement(const Statement& stmt, std::vector<NamedImage>& new_images) {
    const auto source = [this](const ImageRef& ref) -> const Image& {
        const auto it = registry_.find(ref.name);
        if (it == registry_.end()) {
            throw Error(ErrorCode::kUnknownImageRef, "unknown image '" + ref.name + "'");
        }
        return it->second;
    };
    const auto require_new = [this](const std::string& name) {
        if (registry_.contains(name)) {
            throw Error(ErrorCode::kNameConstraint,
                        "image '" + name + "' already exists; use a new id");
        }
    };

    if (const auto* swap = std::get_if<SwapStmt>(&stmt)) {
        const auto n = static_cast<int>(tile_count());
        if (swap->i >= n || swap->j >= n) {
            throw Error(ErrorCode::kSwapIndexOutOfRange,
                        "swap index out of range: state has slots 0.." + std::to_string(n - 1));
        }
        state_ = apply_swap(state_, static_cast<std::size_t>(swap->i),
                            static_cast<std::size_t>(swap->j));
        assert(is_valid_arrangement(state_.slots()));
        ++swaps_executed_;
        return "Swapped slots " + std::to_string(swap->i) + " and " + std::to_string(swap->j) + ".";
    }
    if (const auto* assign = std::get_if<BoxAssignStmt>(&stmt)) {
        boxes_.insert_or_assign(assign->name, assign->box);
        return "Set " + render_statement(stmt) + ".";
    }
    if (const auto* observe = std::get_if<ObserveStmt>(&stmt)) {
        require_new(observe->result);
        Image img = compose_state_image(labeled_, state_);
        const std::string size = dims(img);
        register_image(observe->result, std::move(img), new_images);
        return observe->result + ": current layout (" + size + ").";
    }
    if (const auto* crop = std::get_if<CropStmt>(&stmt)) {
        require_new(crop->result);
        const Image& src = source(crop->source);
        NormalizedBox box;
        if (const auto* name = std::get_if<std::string>(&crop->box)) {
            const auto it = boxes_.find(*name);
            if (it == boxes_.end()) {
                throw Error(ErrorCode::kUnknownImageRef, "unknown crop box '" + *name + "'");
            }
            box = it->second;
        } else {
            box = std::get<NormalizedBox>(crop->box);
        }
        Image img = crop_region(src, box);
        const std::string size = dims(img);
        register_image(crop->result, std::move(img), new_images);
        return crop->result + ": crop of " + crop->source.name + " (" + size + ").";
    }
    const auto& zoom = std::get<ZoomStmt>(stmt);
    require_new(zoom.result);
    Image img = zoom_image(source(zoom.source), zoom.factor, params_.config.zoom_max_side);
    const std::string size = dims(img);
    register_image(zoom.result, std::move(img), new_images);
    return zoom.result + ": " + format_number(zoom.factor) + "x zoom of " + zoom.source.name +
           " (" + size + ").";
}

Episode new_episode(const Image& source, int m, DifficultyLevel level, std::uint64_t seed,
                    const EnvConfig& config, std::string source_image_id) {
    return Episode(source, EpisodeParams{m, level, seed, config, std::move(source_image_id)});
}

}  // namespace jigsaw
