#include "jigsaw/reward.hpp"

#include <cmath>
#include <string>

#include "jigsaw/action.hpp"
#include "jigsaw/error.hpp"
#include "jigsaw/trajectory.hpp"

namespace jigsaw {

void RewardConfig::validate() const {
    if (!std::isfinite(alpha) || !std::isfinite(beta_fmt) || !std::isfinite(gamma)) {
        throw Error(ErrorCode::kInvalidConfig, "reward weights must be finite");
    }
    if (!std::isfinite(lambda) || lambda > 0.0) {
        throw Error(ErrorCode::kInvalidConfig, "reward lambda must be finite and <= 0");
    }
    if (step_max < 1) throw Error(ErrorCode::kInvalidConfig, "reward step_max must be >= 1");
}

int accuracy_reward(const Arrangement& answer, const Arrangement& gt) {
    if (answer.size() != gt.size()) {
        throw Error(ErrorCode::kSizeMismatch, "answer and ground truth differ in size");
    }
    return answer == gt ? 1 : 0;
}

int format_reward(const Trajectory& traj) {
    const Message* last = nullptr;
    for (const Message& msg : traj.messages) {
        if (msg.role != Role::kAssistant) continue;
        if (!extract_tags(msg.text).format_ok) return 0;
        last = &msg;
    }
    if (last == nullptr) return 0;
    if (traj.status == EpisodeStatus::kTruncated) return 1;
    return extract_tags(last->text).answer_blocks.size() == 1 ? 1 : 0;
}

double step_reward(int r_acc, int step_num, const RewardConfig& cfg) {
    if (step_num < 0) throw Error(ErrorCode::kStepOverflow, "negative step count");
    if (step_num > cfg.step_max) {
        throw Error(ErrorCode::kStepOverflow, "step_num " + std::to_string(step_num) +
                                                  " exceeds step_max " +
                                                  std::to_string(cfg.step_max));
    }
    const int charged = r_acc == 1 ? step_num : cfg.step_max;
    return cfg.lambda * static_cast<double>(charged);
}

RewardBreakdown total_reward(int r_acc, int r_format, int step_num, const RewardConfig& cfg) {
    RewardBreakdown out;
    out.r_acc = r_acc;
    out.r_format = r_format;
    out.step_num = step_num;
    out.r_step = step_reward(r_acc, step_num, cfg);
    out.total = cfg.alpha * r_acc + cfg.beta_fmt * r_format + cfg.gamma * out.r_step;
    return out;
}

}  // namespace jigsaw
