#include "jigsaw/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "jigsaw/error.hpp"

namespace jigsaw {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> allowed,
                         std::string_view where) {
    if (!j.is_object()) throw Error(ErrorCode::kSchema, std::string(where) + " must be an object");
    const std::set<std::string_view> names(allowed);
    for (const auto& [key, _] : j.items()) {
        if (!names.contains(key)) {
            throw Error(ErrorCode::kSchema, "unknown key '" + key + "' in " + std::string(where));
        }
    }
}

}  // namespace

void GrpoConfig::validate() const {
    if (!(clip_eps > 0.0 && clip_eps < 1.0)) {
        throw Error(ErrorCode::kInvalidConfig, "clip_eps must lie in (0, 1)");
    }
    if (!(kl_coeff >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "kl_coeff must be >= 0");
    if (!(std_floor > 0.0)) throw Error(ErrorCode::kInvalidConfig, "std_floor must be > 0");
}

std::vector<double> GroupBatch::rewards() const {
    std::vector<double> out;
    out.reserve(trajectories.size());
    for (const auto& t : trajectories) out.push_back(t.reward);
    return out;
}

void GroupBatch::validate() const {
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        const TokenTrajectory& t = trajectories[i];
        const std::size_t len = t.tokens.size();
        if (t.loss_mask.size() != len || t.logp_new.size() != len || t.logp_old.size() != len ||
            t.logp_ref.size() != len) {
            throw Error(ErrorCode::kSizeMismatch,
                        "trajectory " + std::to_string(i) + ": per-token arrays differ in length");
        }
        if (std::none_of(t.loss_mask.begin(), t.loss_mask.end(), [](auto m) { return m != 0; })) {
            throw Error(ErrorCode::kEmptyMask,
                        "trajectory " + std::to_string(i) + " has no masked-in token");
        }
    }
}

json group_batch_to_json(const GroupBatch& batch) {
    json trajs = json::array();
    for (const TokenTrajectory& t : batch.trajectories) {
        std::vector<int> mask(t.loss_mask.begin(), t.loss_mask.end());
        trajs.push_back(json{{"tokens", t.tokens},
                             {"loss_mask", mask},
                             {"logp_new", t.logp_new},
                             {"logp_old", t.logp_old},
                             {"logp_ref", t.logp_ref},
                             {"reward", t.reward}});
    }
    return json{{"group_size", batch.group_size()}, {"trajectories", std::move(trajs)}};
}

GroupBatch group_batch_from_json(const json& j) {
    GroupBatch batch;
    try {
        reject_unknown_keys(j, {"group_size", "trajectories"}, "group batch");
        const auto g = j.at("group_size").get<std::size_t>();
        for (const json& t : j.at("trajectories")) {
            reject_unknown_keys(t, {"tokens", "loss_mask", "logp_new", "logp_old", "logp_ref", "reward"},
                                "trajectory");
            TokenTrajectory traj;
            traj.tokens = t.at("tokens").get<std::vector<int>>();
            for (int m : t.at("loss_mask").get<std::vector<int>>()) {
                if (m != 0 && m != 1) throw Error(ErrorCode::kSchema, "loss_mask entries must be 0 or 1");
                traj.loss_mask.push_back(static_cast<std::uint8_t>(m));
            }
            traj.logp_new = t.at("logp_new").get<std::vector<double>>();
            traj.logp_old = t.at("logp_old").get<std::vector<double>>();
            traj.logp_ref = t.at("logp_ref").get<std::vector<double>>();
            traj.reward = t.at("reward").get<double>();
            batch.trajectories.push_back(std::move(traj));
        }
        if (g != batch.group_size()) throw Error(ErrorCode::kSchema, "group_size mismatch");
    } catch (const json::exception& e) {
        throw Error(ErrorCode::kSchema, std::string("group batch: ") + e.what());
    }
    batch.validate();
    return batch;
}

std::vector<double> group_advantages(std::span<const double> rewards, const GrpoConfig& cfg) {
    std::vector<double> adv(rewards.size(), 0.0);
    if (rewards.empty()) return adv;
    const auto g = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= g;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    const double scale =
        cfg.norm == AdvantageNorm::kMeanStd ? std::max(std::sqrt(var / g), cfg.std_floor) : 1.0;
    for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / scale;
    return adv;
}

namespace {

struct TokenTerms {
    double surrogate = 0.0;
    double d_surrogate = 0.0;  // derivative with respect to logp_new
    bool clipped = false;
};

TokenTerms token_terms(double lp_new, double lp_old, double adv, double eps) {
    const double ratio = std::exp(lp_new - lp_old);
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
    TokenTerms t;
    if (unclipped <= clipped) {
        t.surrogate = unclipped;
        t.d_surrogate = unclipped;
    } else {
        t.surrogate = clipped;
        t.clipped = true;
    }
    return t;
}

double k3(double lp_new, double lp_ref) {
    const double d = lp_ref - lp_new;
    return std::exp(d) - d - 1.0;
}

std::size_t masked_count(const TokenTrajectory& t) {
    return static_cast<std::size_t>(std::count_if(t.loss_mask.begin(), t.loss_mask.end(),
                                                  [](auto m) { return m != 0; }));
}

}  // namespace

double clipped_surrogate(const GroupBatch& batch, std::span<const double> adv,
                         const GrpoConfig& cfg) {
    batch.validate();
    if (adv.size() != batch.group_size()) {
        throw Error(ErrorCode::kSizeMismatch, "one advantage per trajectory is required");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < batch.group_size(); ++i) {
        const TokenTrajectory& t = batch.trajectories[i];
        double sum = 0.0;
        for (std::size_t k = 0; k < t.tokens.size(); ++k) {
            if (t.loss_mask[k] == 0) continue;
            sum += token_terms(t.logp_new[k], t.logp_old[k], adv[i], cfg.clip_eps).surrogate;
        }
        total += sum / static_cast<double>(masked_count(t));
    }
    return total / static_cast<double>(batch.group_size());
}

double kl_penalty(const GroupBatch& batch) {
    batch.validate();
    if (batch.trajectories.empty()) return 0.0;
    double total = 0.0;
    for (const TokenTrajectory& t : batch.trajectories) {
        double sum = 0.0;
        for (std::size_t k = 0; k < t.tokens.size(); ++k) {
            if (t.loss_mask[k] != 0) sum += k3(t.logp_new[k], t.logp_ref[k]);
        }
        total += sum / static_cast<double>(masked_count(t));
    }
    return total / static_cast<double>(batch.group_size());
}

double grpo_objective(const GroupBatch& batch, const GrpoConfig& cfg) {
    const std::vector<double> rewards = batch.rewards();
    const std::vector<double> adv = group_advantages(rewards, cfg);
    double value = clipped_surrogate(batch, adv, cfg);
    if (cfg.kl_coeff != 0.0) value -= cfg.kl_coeff * kl_penalty(batch);
    return value;
}

// ─── Toy policy ────────────────────────────────────────────────

ToyPolicy::ToyPolicy() : theta_(static_cast<std::size_t>(toy::kContexts * toy::kActions), 0.0) {}

ToyPolicy::ToyPolicy(std::vector<double> theta) : theta_(std::move(theta)) {
    if (theta_.size() != static_cast<std::size_t>(toy::kContexts * toy::kActions)) {
        throw Error(ErrorCode::kSizeMismatch, "toy policy expects 13 x 7 parameters");
    }
}

ToyPolicy ToyPolicy::random(Rng& rng, double scale) {
    ToyPolicy p;
    for (double& v : p.theta_) v = scale * standard_normal(rng);
    return p;
}

ToyPolicy ToyPolicy::perturbed(Rng& rng, double scale) const {
    ToyPolicy p = *this;
    for (double& v : p.theta_) v += scale * standard_normal(rng);
    return p;
}

std::array<double, toy::kActions> ToyPolicy::log_probs(int context) const {
    if (context < 0 || context >= toy::kContexts) {
        throw Error(ErrorCode::kIndexOutOfRange, "toy context out of range");
    }
    const double* row = theta_.data() + static_cast<std::size_t>(context) * toy::kActions;
    const double peak = *std::max_element(row, row + toy::kActions);
    double z = 0.0;
    for (int a = 0; a < toy::kActions; ++a) z += std::exp(row[a] - peak);
    const double log_z = peak + std::log(z);
    std::array<double, toy::kActions> out{};
    for (int a = 0; a < toy::kActions; ++a) out[static_cast<std::size_t>(a)] = row[a] - log_z;
    return out;
}

double ToyPolicy::log_prob(int context, int action) const {
    if (action < 0 || action >= toy::kActions) {
        throw Error(ErrorCode::kIndexOutOfRange, "toy action out of range");
    }
    return log_probs(context)[static_cast<std::size_t>(action)];
}

int ToyPolicy::sample(int context, Rng& rng) const {
    const auto lp = log_probs(context);
    const double u = uniform_unit(rng);
    double acc = 0.0;
    for (int a = 0; a < toy::kActions; ++a) {
        acc += std::exp(lp[static_cast<std::size_t>(a)]);
        if (u < acc) return a;
    }
    return toy::kActions - 1;
}

std::vector<int> toy_contexts(const std::vector<int>& tokens) {
    std::vector<int> ctx(tokens.size());
    int prev = toy::kBos;
    for (std::size_t k = 0; k < tokens.size(); ++k) {
        ctx[k] = prev;
        prev = tokens[k];
    }
    return ctx;
}

MiniRollout rollout_mini(const ToyPolicy& policy, const Arrangement& start, int max_actions,
                         const RewardConfig& reward_cfg, Rng& rng) {
    if (start.size() != 4) throw Error(ErrorCode::kInvalidSize, "mini environment is 2x2");
    const Arrangement goal = Arrangement::identity(4);
    Arrangement state = start;
    MiniRollout out;
    int context = toy::kBos;
    int swaps = 0;
    bool answered = false;
    for (int step = 0; step < max_actions; ++step) {
        const int action = policy.sample(context, rng);
        out.tokens.push_back(action);
        out.loss_mask.push_back(1);
        if (action == toy::kAnswerToken) {
            answered = true;
            break;
        }
        const auto [i, j] = toy::kPairs[static_cast<std::size_t>(action)];
        state = apply_swap(state, static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        ++swaps;
        const int feedback = toy::kFeedbackBase + static_cast<int>(count_fixed_points(state, goal));
        out.tokens.push_back(feedback);
        out.loss_mask.push_back(0);
        context = feedback;
    }
    const int acc = answered && state == goal ? 1 : 0;
    out.reward = total_reward(acc, answered ? 1 : 0, std::min(swaps, reward_cfg.step_max),
                              reward_cfg);
    return out;
}

void refresh_logp_new(GroupBatch& batch, const ToyPolicy& policy) {
    for (TokenTrajectory& t : batch.trajectories) {
        const std::vector<int> ctx = toy_contexts(t.tokens);
        for (std::size_t k = 0; k < t.tokens.size(); ++k) {
            if (t.loss_mask[k] != 0) t.logp_new[k] = policy.log_prob(ctx[k], t.tokens[k]);
        }
    }
}

ToyProblem make_toy_problem(std::uint64_t seed, int group, double old_noise, double ref_noise) {
    if (group < 1) throw Error(ErrorCode::kInvalidSize, "group size must be >= 1");
    Rng rng(seed);
    ToyProblem p{ToyPolicy::random(rng, 1.0), {}, {}, {}};
    p.old = p.current.perturbed(rng, old_noise);
    p.ref = p.current.perturbed(rng, ref_noise);
    const Arrangement start = sample_with_fixed_points(4, uniform_below(rng, 2) == 0 ? 0 : 2, rng);
    RewardConfig reward_cfg;
    for (int g = 0; g < group; ++g) {
        MiniRollout r = rollout_mini(p.old, start, reward_cfg.step_max, reward_cfg, rng);
        TokenTrajectory t;
        t.tokens = std::move(r.tokens);
        t.loss_mask = std::move(r.loss_mask);
        t.logp_new.assign(t.tokens.size(), 0.0);
        t.logp_old.assign(t.tokens.size(), 0.0);
        t.logp_ref.assign(t.tokens.size(), 0.0);
        const std::vector<int> ctx = toy_contexts(t.tokens);
        for (std::size_t k = 0; k < t.tokens.size(); ++k) {
            if (t.loss_mask[k] == 0) continue;
            t.logp_old[k] = p.old.log_prob(ctx[k], t.tokens[k]);
            t.logp_ref[k] = p.ref.log_prob(ctx[k], t.tokens[k]);
        }
        t.reward = r.reward.total;
        p.batch.trajectories.push_back(std::move(t));
    }
    refresh_logp_new(p.batch, p.current);
    return p;
}

ObjectiveGrad grpo_objective_and_gradient(const ToyPolicy& policy, const GroupBatch& batch,
                                          const GrpoConfig& cfg, GradientBug bug) {
    batch.validate();
    const std::vector<double> rewards = batch.rewards();
    const std::vector<double> adv = group_advantages(rewards, cfg);
    ObjectiveGrad out;
    out.grad.assign(policy.param_count(), 0.0);
    const auto g = static_cast<double>(batch.group_size());
    for (std::size_t i = 0; i < batch.group_size(); ++i) {
        const TokenTrajectory& t = batch.trajectories[i];
        const double w = 1.0 / (g * static_cast<double>(masked_count(t)));
        const std::vector<int> ctx = toy_contexts(t.tokens);
        for (std::size_t k = 0; k < t.tokens.size(); ++k) {
            if (t.loss_mask[k] == 0) continue;
            const auto lp = policy.log_probs(ctx[k]);
            const double lp_new = lp[static_cast<std::size_t>(t.tokens[k])];
            const TokenTerms terms = token_terms(lp_new, t.logp_old[k], adv[i], cfg.clip_eps);
            double d_lp = terms.d_surrogate;
            if (bug == GradientBug::kIgnoreClip) d_lp = std::exp(lp_new - t.logp_old[k]) * adv[i];
            double value = terms.surrogate;
            if (cfg.kl_coeff != 0.0) {
                value -= cfg.kl_coeff * k3(lp_new, t.logp_ref[k]);
                d_lp -= cfg.kl_coeff * (1.0 - std::exp(t.logp_ref[k] - lp_new));
            }
            out.value += w * value;
            // d log softmax(theta)_a / d theta_b = [a == b] - p_b
            double* row = out.grad.data() + static_cast<std::size_t>(ctx[k]) * toy::kActions;
            for (int b = 0; b < toy::kActions; ++b) {
                const double indicator = b == t.tokens[k] ? 1.0 : 0.0;
                const double p_b =
                    bug == GradientBug::kNoSoftmaxTerm ? 0.0 : std::exp(lp[static_cast<std::size_t>(b)]);
                row[b] += w * d_lp * (indicator - p_b);
            }
        }
    }
    return out;
}

GradCheck finite_difference_check(std::uint64_t seed, const GrpoConfig& cfg, double h,
                                  GradientBug bug, double denom_floor) {
    cfg.validate();
    const ToyProblem p = make_toy_problem(seed);
    const ObjectiveGrad analytic = grpo_objective_and_gradient(p.current, p.batch, cfg, bug);
    GradCheck out;
    out.objective = analytic.value;
    const std::vector<double> adv = group_advantages(p.batch.rewards(), cfg);
    for (std::size_t i = 0; i < p.batch.group_size(); ++i) {
        const TokenTrajectory& t = p.batch.trajectories[i];
        for (std::size_t k = 0; k < t.tokens.size(); ++k) {
            if (t.loss_mask[k] == 0) continue;
            ++out.masked_in_tokens;
            if (token_terms(t.logp_new[k], t.logp_old[k], adv[i], cfg.clip_eps).clipped) {
                ++out.clipped_tokens;
            }
        }
    }
    ToyPolicy probe = p.current;
    for (std::size_t q = 0; q < probe.param_count(); ++q) {
        const double base = probe.params()[q];
        probe.params()[q] = base + h;
        const double plus = grpo_objective_and_gradient(probe, p.batch, cfg).value;
        probe.params()[q] = base - h;
        const double minus = grpo_objective_and_gradient(probe, p.batch, cfg).value;
        probe.params()[q] = base;
        const double numeric = (plus - minus) / (2.0 * h);
        const double a = analytic.grad[q];
        const double rel =
            std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), denom_floor});
        if (rel > out.max_rel_error) {
            out.max_rel_error = rel;
            out.worst_param = q;
        }
    }
    return out;
}

}  // namespace jigsaw
