#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "jigsaw/perm.hpp"
#include "jigsaw/reward.hpp"
#include "jigsaw/rng.hpp"

namespace jigsaw {

enum class AdvantageNorm { kMeanStd, kMeanOnly };

struct GrpoConfig {
    double clip_eps = 0.2;
    double kl_coeff = 0.0;
    double std_floor = 1e-6;
    AdvantageNorm norm = AdvantageNorm::kMeanStd;

    void validate() const;
};

// One sampled response. loss_mask is 1 for policy-generated tokens and 0 for
// prompt or environment tokens; the log-probability arrays are per token.
struct TokenTrajectory {
    std::vector<int> tokens;
    std::vector<std::uint8_t> loss_mask;
    std::vector<double> logp_new;
    std::vector<double> logp_old;
    std::vector<double> logp_ref;
    double reward = 0.0;

    bool operator==(const TokenTrajectory&) const = default;
};

struct GroupBatch {
    std::vector<TokenTrajectory> trajectories;

    [[nodiscard]] std::size_t group_size() const noexcept { return trajectories.size(); }
    [[nodiscard]] std::vector<double> rewards() const;
    // Throws kSizeMismatch on ragged arrays, kEmptyMask when a trajectory has
    // no masked-in token.
    void validate() const;
    bool operator==(const GroupBatch&) const = default;
};

nlohmann::json group_batch_to_json(const GroupBatch& batch);
GroupBatch group_batch_from_json(const nlohmann::json& j);

std::vector<double> group_advantages(std::span<const double> rewards, const GrpoConfig& cfg);

// Per-trajectory masked mean of min(r * A, clip(r, 1 - eps, 1 + eps) * A),
// averaged over the group.
double clipped_surrogate(const GroupBatch& batch, std::span<const double> adv,
                         const GrpoConfig& cfg);

// k3 estimator of KL(new || ref) with the same masked normalization.
double kl_penalty(const GroupBatch& batch);

// surrogate - kl_coeff * kl, using the batch's own logp_new.
double grpo_objective(const GroupBatch& batch, const GrpoConfig& cfg);

// ─── Toy policy and miniature swap environment ─────────────────

// Tokens 0..5 swap one of the six slot pairs of a 2x2 grid, token 6 answers,
// tokens 7..11 report the number of correctly placed tiles (0..4) and are
// emitted by the environment. The policy conditions on the previous token.
namespace toy {
inline constexpr int kSwapTokens = 6;
inline constexpr int kAnswerToken = 6;
inline constexpr int kActions = 7;
inline constexpr int kFeedbackBase = 7;
inline constexpr int kVocab = 12;
inline constexpr int kBos = 12;
inline constexpr int kContexts = 13;
inline constexpr std::array<std::pair<int, int>, 6> kPairs{
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
}  // namespace toy

class ToyPolicy {
public:
    ToyPolicy();
    explicit ToyPolicy(std::vector<double> theta);

    static ToyPolicy random(Rng& rng, double scale = 1.0);

    [[nodiscard]] std::size_t param_count() const noexcept { return theta_.size(); }
    [[nodiscard]] const std::vector<double>& params() const noexcept { return theta_; }
    [[nodiscard]] std::vector<double>& params() noexcept { return theta_; }

    [[nodiscard]] std::array<double, toy::kActions> log_probs(int context) const;
    [[nodiscard]] double log_prob(int context, int action) const;
    int sample(int context, Rng& rng) const;

    [[nodiscard]] ToyPolicy perturbed(Rng& rng, double scale) const;

private:
    std::vector<double> theta_;  // kContexts x kActions, row-major
};

// Context (previous token) for each position of a token sequence.
std::vector<int> toy_contexts(const std::vector<int>& tokens);

struct MiniRollout {
    std::vector<int> tokens;
    std::vector<std::uint8_t> loss_mask;
    RewardBreakdown reward;
};

// Samples actions from `policy` until it answers or emits max_actions swaps.
// The goal arrangement is the identity.
MiniRollout rollout_mini(const ToyPolicy& policy, const Arrangement& start, int max_actions,
                         const RewardConfig& reward_cfg, Rng& rng);

struct ToyProblem {
    ToyPolicy current;
    ToyPolicy old;
    ToyPolicy ref;
    GroupBatch batch;
};

// Builds a group of `group` rollouts from one start state, sampled from a
// perturbed "old" policy, with logp_new/old/ref filled in.
ToyProblem make_toy_problem(std::uint64_t seed, int group = 8, double old_noise = 0.5,
                            double ref_noise = 0.3);

// Overwrites logp_new at masked-in positions from `policy`.
void refresh_logp_new(GroupBatch& batch, const ToyPolicy& policy);

// Deliberate defects for negative-control runs of the gradient check.
enum class GradientBug { kNone, kIgnoreClip, kNoSoftmaxTerm };

struct ObjectiveGrad {
    double value = 0.0;
    std::vector<double> grad;
};

// Objective and analytic gradient with respect to the policy parameters.
// logp_new is recomputed from `policy`; the batch copy is not consulted.
ObjectiveGrad grpo_objective_and_gradient(const ToyPolicy& policy, const GroupBatch& batch,
                                          const GrpoConfig& cfg,
                                          GradientBug bug = GradientBug::kNone);

struct GradCheck {
    double max_rel_error = 0.0;
    std::size_t worst_param = 0;
    double objective = 0.0;
    int clipped_tokens = 0;
    int masked_in_tokens = 0;
};

// Central differences with step h; the relative error of each parameter is
// |analytic - numeric| / max(|analytic|, |numeric|, denom_floor).
GradCheck finite_difference_check(std::uint64_t seed, const GrpoConfig& cfg, double h = 1e-5,
                                  GradientBug bug = GradientBug::kNone,
                                  double denom_floor = 1e-6);

}  // namespace jigsaw
