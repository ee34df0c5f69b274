#include <algorithm>
#include <cstdio>

#include "jigsaw/codec.hpp"
#include "jigsaw/error.hpp"
#include "jigsaw/server.hpp"
#include "jigsaw/synth.hpp"

#ifndef JIGSAW_VERSION
#define JIGSAW_VERSION "0.0.0"
#endif

namespace jigsaw {

using nlohmann::json;

std::string_view engine_version() noexcept { return JIGSAW_VERSION; }

void ServerConfig::validate() const {
    if (port < 0 || port > 65535) throw Error(ErrorCode::kInvalidConfig, "port must be in 0..65535");
    if (http_port < -1 || http_port > 65535) {
        throw Error(ErrorCode::kInvalidConfig, "http_port must be -1 or in 0..65535");
    }
    if (ttl_seconds < 1) throw Error(ErrorCode::kInvalidConfig, "ttl_seconds must be >= 1");
    if (max_episodes < 1) throw Error(ErrorCode::kInvalidConfig, "max_episodes must be >= 1");
    if (synthetic_size < 2) throw Error(ErrorCode::kInvalidConfig, "synthetic_size must be >= 2");
    env.validate();
}

json server_config_to_json(const ServerConfig& cfg) {
    return json{{"host", cfg.host},
                {"port", cfg.port},
                {"http_port", cfg.http_port},
                {"ttl_seconds", cfg.ttl_seconds},
                {"max_episodes", cfg.max_episodes},
                {"env", env_config_to_json(cfg.env)},
                {"corpus", cfg.corpus},
                {"synthetic_size", cfg.synthetic_size}};
}

std::string config_hash(const ServerConfig& cfg) {
    return sha256_hex(server_config_to_json(cfg).dump());
}

json wire_error(std::string_view message, std::string_view code, bool retriable) {
    return json{{"v", kWireVersion},
                {"ok", false},
                {"error", message},
                {"error_code", code},
                {"retriable", retriable}};
}

namespace {

json encode_images(const std::vector<NamedImage>& images) {
    json out = json::array();
    for (const auto& [name, img] : images) {
        out.push_back(json{{"name", name}, {"png_base64", base64_encode(encode_png(img))}});
    }
    return out;
}

json from_error(const Error& e) {
    return wire_error(e.what(), to_string(e.code()), e.code() == ErrorCode::kBusy);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::kSchema, std::string("field '") + key + "' has the wrong type");
    }
}

}  // namespace

EpisodeStore::EpisodeStore(ServerConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    config_hash_ = config_hash(cfg_);
}

std::size_t EpisodeStore::size() const {
    std::shared_lock lock(map_mutex_);
    return episodes_.size();
}

std::shared_ptr<EpisodeStore::Slot> EpisodeStore::find(const std::string& id) {
    std::shared_lock lock(map_mutex_);
    const auto it = episodes_.find(id);
    if (it == episodes_.end()) throw Error(ErrorCode::kUnknownEpisode, "unknown episode");
    it->second->last_used.store(Clock::now().time_since_epoch().count());
    return it->second;
}

json EpisodeStore::handle(const json& request) {
    try {
        if (!request.is_object()) return wire_error("request must be a JSON object", "SchemaError");
        if (request.contains("v") && request.at("v") != kWireVersion) {
            return wire_error("unsupported protocol version", "ProtocolVersionMismatch");
        }
        const std::string op = get_or<std::string>(request, "op", "");
        const std::string id = get_or<std::string>(request, "episode_id", "");
        const json payload = request.contains("payload") ? request.at("payload") : json::object();
        if (!payload.is_object()) return wire_error("payload must be an object", "SchemaError");
        if (op == "new_episode") return new_episode(payload);
        if (op == "step") return step(id, payload);
        if (op == "state") return state(id, payload);
        if (op == "abort") return abort(id);
        if (op == "health") return health();
        return wire_error("unknown op '" + op + "'", "SchemaError");
    } catch (const Error& e) {
        return from_error(e);
    } catch (const std::exception& e) {
        return wire_error(std::string("internal error: ") + e.what(), "Internal");
    }
}

json EpisodeStore::new_episode(const json& payload) {
    const int m = get_or<int>(payload, "m", 2);
    const int level = get_or<int>(payload, "level", 0);
    const auto seed = get_or<std::uint64_t>(payload, "seed", 0);
    EnvConfig env = cfg_.env;
    if (payload.contains("env")) env = env_config_from_json(payload.at("env"));
    if (payload.contains("max_turns")) env.max_turns = get_or<int>(payload, "max_turns", env.max_turns);
    env.validate();

    Image source;
    std::string source_id;
    if (payload.contains("image_png_base64")) {
        source = decode_png(base64_decode(get_or<std::string>(payload, "image_png_base64", "")));
        source_id = get_or<std::string>(payload, "image_id", "upload");
    } else if (!cfg_.corpus.empty()) {
        source_id = cfg_.corpus[seed % cfg_.corpus.size()];
        source = read_png(source_id);
    } else {
        const auto kind = static_cast<SynthKind>(seed % 3);
        source = synthesize_image(kind, cfg_.synthetic_size, cfg_.synthetic_size, seed);
        source_id = "synthetic:" + std::to_string(seed);
    }

    auto slot = std::make_shared<Slot>(
        source, EpisodeParams{m, DifficultyLevel{level}, seed, env, source_id});
    slot->last_used.store(Clock::now().time_since_epoch().count());
    char id[32];
    std::snprintf(id, sizeof id, "ep-%06llu",
                  static_cast<unsigned long long>(next_id_.fetch_add(1)));
    {
        std::unique_lock lock(map_mutex_);
        if (episodes_.size() >= cfg_.max_episodes) {
            throw Error(ErrorCode::kBusy, "too many episodes");
        }
        episodes_.emplace(id, slot);
    }
    const Episode& ep = slot->episode;
    return json{{"v", kWireVersion},
                {"ok", true},
                {"episode_id", id},
                {"status", to_string(ep.status())},
                {"system_prompt", ep.system_prompt()},
                {"user_prompt", ep.user_prompt()},
                {"images", encode_images(ep.tile_images())},
                {"state", ep.state().label_names()},
                {"turn", ep.turn()},
                {"max_turns", ep.max_turns()},
                {"m", m},
                {"level", level},
                {"seed", seed},
                {"source_image_id", source_id}};
}

json EpisodeStore::step(const std::string& id, const json& payload) {
    const std::shared_ptr<Slot> slot = find(id);
    std::unique_lock lock(slot->mutex, std::try_to_lock);
    if (!lock.owns_lock()) return wire_error("busy", "Busy", true);
    if (!payload.contains("text")) throw Error(ErrorCode::kSchema, "step needs payload.text");
    Episode& ep = slot->episode;
    if (ep.status() != EpisodeStatus::kRunning) {
        return wire_error("episode finished", "EpisodeFinished");
    }
    const StepOutcome out = ep.step(get_or<std::string>(payload, "text", ""));
    json resp{{"v", kWireVersion},
              {"ok", true},
              {"episode_id", id},
              {"status", to_string(out.status)},
              {"feedback_text", out.feedback_text},
              {"images", encode_images(out.new_images)},
              {"state", ep.state().label_names()},
              {"turn", ep.turn()},
              {"reward", out.reward ? reward_to_json(*out.reward) : json(nullptr)}};
    slot->last_used.store(Clock::now().time_since_epoch().count());
    return resp;
}

json EpisodeStore::state(const std::string& id, const json& payload) {
    const std::shared_ptr<Slot> slot = find(id);
    std::lock_guard lock(slot->mutex);
    const Episode& ep = slot->episode;
    const Trajectory& t = ep.trajectory();
    json resp{{"v", kWireVersion},
              {"ok", true},
              {"episode_id", id},
              {"status", to_string(ep.status())},
              {"state", ep.state().label_names()},
              {"turn", ep.turn()},
              {"max_turns", ep.max_turns()},
              {"reward", t.reward ? reward_to_json(*t.reward) : json(nullptr)}};
    if (get_or<bool>(payload, "trajectory", false)) {
        resp["trajectory"] = trajectory_to_json(t);
        std::vector<NamedImage> images(t.images.begin(), t.images.end());
        resp["trajectory_images"] = encode_images(images);
    }
    return resp;
}

json EpisodeStore::abort(const std::string& id) {
    const std::shared_ptr<Slot> slot = find(id);
    // Blocks until an in-flight step has finished.
    std::lock_guard lock(slot->mutex);
    slot->episode.abort();
    return json{{"v", kWireVersion},
                {"ok", true},
                {"episode_id", id},
                {"status", to_string(slot->episode.status())}};
}

json EpisodeStore::health() const {
    return json{{"v", kWireVersion},
                {"ok", true},
                {"status", "ok"},
                {"version", engine_version()},
                {"config_hash", config_hash_},
                {"episodes", size()}};
}

std::size_t EpisodeStore::reap(Clock::time_point now) {
    const auto ttl = std::chrono::duration_cast<Clock::duration>(std::chrono::seconds(cfg_.ttl_seconds));
    std::unique_lock lock(map_mutex_);
    std::size_t removed = 0;
    for (auto it = episodes_.begin(); it != episodes_.end();) {
        const Clock::time_point last{Clock::duration{it->second->last_used.load()}};
        std::unique_lock busy(it->second->mutex, std::try_to_lock);
        if (busy.owns_lock() && now - last > ttl) {
            busy.unlock();
            it = episodes_.erase(it);
            ++removed;
        } else {
            ++it;
        }
    }
    return removed;
}

}  // namespace jigsaw
