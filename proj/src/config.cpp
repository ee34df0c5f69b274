#include "jigsaw/config.hpp"

#include <set>

#include "jigsaw/codec.hpp"
#include "jigsaw/error.hpp"

namespace jigsaw {

using nlohmann::json;

namespace {

// Optional-key view of one JSON object; unknown keys fail on construction.
class Section {
public:
    Section(const json& j, std::string where, std::initializer_list<const char*> keys)
        : j_(j), where_(std::move(where)) {
        if (!j.is_object()) throw Error(ErrorCode::kSchema, where_ + " must be an object");
        const std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& item : j.items()) {
            if (!allowed.contains(item.key())) {
                throw Error(ErrorCode::kSchema, "unknown key '" + item.key() + "' in " + where_);
            }
        }
    }

    template <typename T>
    void read(const char* key, T& out) const {
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw Error(ErrorCode::kSchema, where_ + "." + key + " has the wrong type");
        }
    }

    [[nodiscard]] const json* sub(const char* key) const {
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }
    [[nodiscard]] std::string path(const char* key) const { return where_ + "." + key; }

private:
    const json& j_;
    std::string where_;
};

void read_reward(const json& j, const std::string& where, RewardConfig& r) {
    const Section s(j, where, {"alpha", "beta_fmt", "gamma", "lambda", "step_max"});
    s.read("alpha", r.alpha);
    s.read("beta_fmt", r.beta_fmt);
    s.read("gamma", r.gamma);
    s.read("lambda", r.lambda);
    s.read("step_max", r.step_max);
}

void read_env(const json& j, const std::string& where, EnvConfig& e) {
    const Section s(j, where,
                    {"max_turns", "feedback_max_side", "zoom_max_side", "step_count_mode", "reward"});
    s.read("max_turns", e.max_turns);
    s.read("feedback_max_side", e.feedback_max_side);
    s.read("zoom_max_side", e.zoom_max_side);
    std::string mode(to_string(e.step_count_mode));
    s.read("step_count_mode", mode);
    e.step_count_mode = step_count_mode_from_string(mode);
    if (const json* r = s.sub("reward")) read_reward(*r, s.path("reward"), e.reward);
}

}  // namespace

std::string_view to_string(AdvantageNorm norm) {
    return norm == AdvantageNorm::kMeanStd ? "mean_std" : "mean_only";
}

AdvantageNorm advantage_norm_from_string(std::string_view text) {
    if (text == "mean_std") return AdvantageNorm::kMeanStd;
    if (text == "mean_only") return AdvantageNorm::kMeanOnly;
    throw Error(ErrorCode::kSchema, "advantage norm must be mean_std or mean_only");
}

ActionKind action_kind_from_string(std::string_view text) {
    for (ActionKind k : {ActionKind::kSwap, ActionKind::kObserve, ActionKind::kCrop, ActionKind::kZoom}) {
        if (to_string(k) == text) return k;
    }
    throw Error(ErrorCode::kSchema, "unknown action kind '" + std::string(text) + "'");
}

void RunConfig::validate() const {
    env.validate();
    grpo.validate();
    filter.validate();
    server.validate();
    if (group_size < 1) throw Error(ErrorCode::kInvalidConfig, "group_size must be >= 1");
    if (jobs < 1) throw Error(ErrorCode::kInvalidConfig, "jobs must be >= 1");
}

json run_config_to_json(const RunConfig& cfg) {
    json kinds = json::array();
    for (ActionKind k : cfg.filter.required_action_kinds) kinds.push_back(to_string(k));
    json out{{"env", env_config_to_json(cfg.env)},
             {"grpo",
              {{"clip_eps", cfg.grpo.clip_eps},
               {"kl_coeff", cfg.grpo.kl_coeff},
               {"std_floor", cfg.grpo.std_floor},
               {"norm", to_string(cfg.grpo.norm)}}},
             {"group_size", cfg.group_size},
             {"filter",
              {{"step_min", cfg.filter.step_min},
               {"step_max_keep", cfg.filter.step_max_keep},
               {"required_action_kinds", kinds},
               {"min_kind_fraction", cfg.filter.min_kind_fraction}}},
             {"greedy",
              {{"exhaustive_max_tiles", cfg.greedy.exhaustive_max_tiles},
               {"beam_width", cfg.greedy.beam_width}}},
             {"server", server_config_to_json(cfg.server)},
             {"jobs", cfg.jobs}};
    out["server"].erase("env");  // the server uses the top-level env section
    out["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
    return out;
}

RunConfig run_config_from_json(const json& j, RunConfig cfg) {
    const Section s(j, "config",
                    {"seed", "env", "grpo", "group_size", "filter", "greedy", "server", "jobs"});
    if (const json* seed = s.sub("seed"); seed && !seed->is_null()) {
        std::uint64_t v = 0;
        s.read("seed", v);
        cfg.seed = v;
    }
    if (const json* e = s.sub("env")) read_env(*e, "config.env", cfg.env);
    if (const json* g = s.sub("grpo")) {
        const Section gs(*g, "config.grpo", {"clip_eps", "kl_coeff", "std_floor", "norm"});
        gs.read("clip_eps", cfg.grpo.clip_eps);
        gs.read("kl_coeff", cfg.grpo.kl_coeff);
        gs.read("std_floor", cfg.grpo.std_floor);
        std::string norm(to_string(cfg.grpo.norm));
        gs.read("norm", norm);
        cfg.grpo.norm = advantage_norm_from_string(norm);
    }
    s.read("group_size", cfg.group_size);
    if (const json* f = s.sub("filter")) {
        const Section fs(*f, "config.filter",
                         {"step_min", "step_max_keep", "required_action_kinds", "min_kind_fraction"});
        fs.read("step_min", cfg.filter.step_min);
        fs.read("step_max_keep", cfg.filter.step_max_keep);
        fs.read("min_kind_fraction", cfg.filter.min_kind_fraction);
        if (fs.sub("required_action_kinds")) {
            std::vector<std::string> names;
            fs.read("required_action_kinds", names);
            cfg.filter.required_action_kinds.clear();
            for (const auto& n : names) cfg.filter.required_action_kinds.push_back(action_kind_from_string(n));
        }
    }
    if (const json* g = s.sub("greedy")) {
        const Section gs(*g, "config.greedy", {"exhaustive_max_tiles", "beam_width"});
        gs.read("exhaustive_max_tiles", cfg.greedy.exhaustive_max_tiles);
        gs.read("beam_width", cfg.greedy.beam_width);
    }
    if (const json* sv = s.sub("server")) {
        const Section ss(*sv, "config.server",
                         {"host", "port", "http_port", "ttl_seconds", "max_episodes", "corpus",
                          "synthetic_size"});
        ss.read("host", cfg.server.host);
        ss.read("port", cfg.server.port);
        ss.read("http_port", cfg.server.http_port);
        ss.read("ttl_seconds", cfg.server.ttl_seconds);
        ss.read("max_episodes", cfg.server.max_episodes);
        ss.read("corpus", cfg.server.corpus);
        ss.read("synthetic_size", cfg.server.synthetic_size);
    }
    s.read("jobs", cfg.jobs);
    cfg.server.env = cfg.env;
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::kSchema, path.string() + ": " + e.what());
    }
    return run_config_from_json(doc);
}

}  // namespace jigsaw
