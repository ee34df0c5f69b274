#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "jigsaw/env.hpp"

namespace jigsaw {

inline constexpr int kWireVersion = 1;

std::string_view engine_version() noexcept;

struct ServerConfig {
    std::string host = "127.0.0.1";
    int port = 0;          // line-framed JSON; 0 picks a free port
    int http_port = -1;    // -1 disables HTTP, 0 picks a free port
    int ttl_seconds = 600;
    std::size_t max_episodes = 1024;
    EnvConfig env;
    // Images served when a request carries none; empty means synthetic ones.
    std::vector<std::string> corpus;
    int synthetic_size = 96;

    void validate() const;
};

nlohmann::json server_config_to_json(const ServerConfig& cfg);
// Hash of the canonical JSON form, reported by the health op.
std::string config_hash(const ServerConfig& cfg);

// Transport-independent request handling. Every public call is thread safe.
//
// Request:  {"v":1, "op":"new_episode"|"step"|"state"|"abort"|"health",
//            "episode_id":"...", "payload":{...}}
// Response: {"v":1, "ok":bool, "episode_id":..., "status":..., ...,
//            "error":"...", "error_code":"...", "retriable":bool}
class EpisodeStore {
public:
    explicit EpisodeStore(ServerConfig cfg);

    nlohmann::json handle(const nlohmann::json& request);

    // Drops episodes idle for longer than the TTL. Returns how many went.
    std::size_t reap(std::chrono::steady_clock::time_point now);
    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] const ServerConfig& config() const noexcept { return cfg_; }

private:
    using Clock = std::chrono::steady_clock;

    struct Slot {
        Slot(const Image& source, const EpisodeParams& params) : episode(source, params) {}
        std::mutex mutex;
        Episode episode;
        std::atomic<Clock::rep> last_used{0};
    };

    nlohmann::json new_episode(const nlohmann::json& payload);
    nlohmann::json step(const std::string& id, const nlohmann::json& payload);
    nlohmann::json state(const std::string& id, const nlohmann::json& payload);
    nlohmann::json abort(const std::string& id);
    nlohmann::json health() const;
    std::shared_ptr<Slot> find(const std::string& id);

    ServerConfig cfg_;
    std::string config_hash_;
    mutable std::shared_mutex map_mutex_;
    std::map<std::string, std::shared_ptr<Slot>> episodes_;
    std::atomic<std::uint64_t> next_id_{1};
};

nlohmann::json wire_error(std::string_view message, std::string_view code, bool retriable = false);

// Serves an EpisodeStore over line-framed TCP and, optionally, HTTP.
class Server {
public:
    explicit Server(ServerConfig cfg);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    // Binds and starts serving in background threads. Throws Error(kBind).
    void start();
    // Stops accepting, lets in-flight requests finish, then returns.
    void stop();

    [[nodiscard]] int port() const noexcept { return port_; }
    [[nodiscard]] int http_port() const noexcept { return http_port_; }
    [[nodiscard]] EpisodeStore& store() noexcept { return store_; }

private:
    struct Impl;
    void reaper_loop();

    EpisodeStore store_;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
    int http_port_ = -1;
    std::thread reaper_;
    std::mutex reaper_mutex_;
    std::condition_variable reaper_cv_;
    bool stopping_ = false;
    bool started_ = false;
};

// Blocking line-framed client, used by tests and the CLI.
class WireClient {
public:
    WireClient(const std::string& host, int port);
    ~WireClient();
    WireClient(const WireClient&) = delete;
    WireClient& operator=(const WireClient&) = delete;

    nlohmann::json call(const nlohmann::json& request);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace jigsaw
