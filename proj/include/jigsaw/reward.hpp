#pragma once

#include "jigsaw/perm.hpp"

namespace jigsaw {

struct Trajectory;

struct RewardConfig {
    double alpha = 0.8;     // accuracy weight
    double beta_fmt = 0.2;  // format weight
    double gamma = 1.0;     // step weight
    double lambda = -0.05;  // per-step penalty, <= 0
    int step_max = 5;

    void validate() const;
    bool operator==(const RewardConfig&) const = default;
};

struct RewardBreakdown {
    int r_acc = 0;
    int r_format = 0;
    double r_step = 0.0;
    double total = 0.0;
    int step_num = 0;

    bool operator==(const RewardBreakdown&) const = default;
};

// 1 iff the declared answer equals the ground truth.
int accuracy_reward(const Arrangement& answer, const Arrangement& gt);

// 1 iff every assistant turn is well tagged and the last one carries exactly
// one answer block. Truncated trajectories are judged on tags only.
int format_reward(const Trajectory& traj);

// lambda * step_num when correct, lambda * step_max otherwise.
double step_reward(int r_acc, int step_num, const RewardConfig& cfg);

RewardBreakdown total_reward(int r_acc, int r_format, int step_num, const RewardConfig& cfg);

}  // namespace jigsaw
