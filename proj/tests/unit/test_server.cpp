#include <chrono>
#include <future>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "jigsaw/agents.hpp"
#include "jigsaw/codec.hpp"
#include "jigsaw/error.hpp"
#include "jigsaw/server.hpp"
#include "jigsaw/synth.hpp"

using namespace jigsaw;
using nlohmann::json;

namespace {

json req(const std::string& op, const std::string& id = "", json payload = json::object()) {
    json r{{"v", kWireVersion}, {"op", op}, {"payload", std::move(payload)}};
    if (!id.empty()) r["episode_id"] = id;
    return r;
}

Arrangement from_names(const json& names) {
    std::vector<Label> slots;
    for (const auto& n : names) slots.push_back(parse_label_name(n.get<std::string>()));
    return Arrangement(slots);
}

// In-process twin of a server-side synthetic episode.
Episode local_twin(std::uint64_t seed, int m, int level, const EnvConfig& env, int size = 96) {
    const Image src = synthesize_image(static_cast<SynthKind>(seed % 3), size, size, seed);
    return Episode(src, EpisodeParams{m, DifficultyLevel{level}, seed, env, "synthetic:" + std::to_string(seed)});
}

}  // namespace

TEST(Store, EpisodeLifecycle) {
    EpisodeStore store(ServerConfig{});
    const json created = store.handle(req("new_episode", "", {{"m", 2}, {"level", 1}, {"seed", 7}}));
    ASSERT_TRUE(created["ok"]) << created.dump();
    const std::string id = created["episode_id"];
    EXPECT_EQ(created["images"].size(), 4u);
    EXPECT_EQ(created["state"], json({"A", "B", "C", "D"}));

    // Tile images are pixel-exact with the in-process episode.
    Episode twin = local_twin(7, 2, 1, EnvConfig{});
    for (std::size_t k = 0; k < 4; ++k) {
        const auto bytes = base64_decode(created["images"][k]["png_base64"].get<std::string>());
        EXPECT_EQ(decode_png(bytes), twin.tile_images()[k].second);
    }

    const json stepped = store.handle(req("step", id, {{"text", "<think>t</think><code>observation_image_1 = observation(state)</code>"}}));
    EXPECT_TRUE(stepped["ok"]);
    EXPECT_EQ(stepped["status"], "continue");
    EXPECT_EQ(stepped["turn"], 1);
    EXPECT_EQ(stepped["images"][0]["name"], "observation_image_1");

    const json state = store.handle(req("state", id, {{"trajectory", true}}));
    EXPECT_TRUE(state.contains("trajectory"));
    EXPECT_EQ(state["status"], "running");

    const json aborted = store.handle(req("abort", id));
    EXPECT_EQ(aborted["status"], "aborted");
    const json after = store.handle(req("step", id, {{"text", "<answer>x</answer>"}}));
    EXPECT_FALSE(after["ok"]);
    EXPECT_EQ(after["error"], "episode finished");
    EXPECT_EQ(after["error_code"], "EpisodeFinished");
}

TEST(Store, ErrorsAreStructured) {
    EpisodeStore store(ServerConfig{});
    json r = store.handle(req("step", "ep-999999", {{"text", "x"}}));
    EXPECT_EQ(r["error_code"], "UnknownEpisode");
    r = store.handle(json{{"v", 2}, {"op", "health"}});
    EXPECT_EQ(r["error_code"], "ProtocolVersionMismatch");
    r = store.handle(req("dance"));
    EXPECT_EQ(r["error_code"], "SchemaError");
    r = store.handle(req("new_episode", "", {{"m", 2}, {"level", 3}}));
    EXPECT_EQ(r["error_code"], "InvalidLevel");
    r = store.handle(req("new_episode", "", {{"m", "two"}}));
    EXPECT_EQ(r["error_code"], "SchemaError");
    r = store.handle(req("new_episode", "", {{"image_png_base64", "AAAA"}}));
    EXPECT_EQ(r["error_code"], "UndecodableImage");
    r = store.handle(json::array());
    EXPECT_FALSE(r["ok"]);
    const json h = store.handle(req("health"));
    EXPECT_TRUE(h["ok"]);
    EXPECT_EQ(h["config_hash"], config_hash(store.config()));
}

TEST(Store, CapacityAndReaping) {
    ServerConfig cfg;
    cfg.max_episodes = 2;
    cfg.ttl_seconds = 1;
    EpisodeStore store(cfg);
    EXPECT_TRUE(store.handle(req("new_episode", "", {{"seed", 1}}))["ok"]);
    EXPECT_TRUE(store.handle(req("new_episode", "", {{"seed", 2}}))["ok"]);
    const json full = store.handle(req("new_episode", "", {{"seed", 3}}));
    EXPECT_EQ(full["error_code"], "Busy");
    EXPECT_TRUE(full["retriable"]);
    EXPECT_EQ(store.reap(std::chrono::steady_clock::now()), 0u);
    EXPECT_EQ(store.reap(std::chrono::steady_clock::now() + std::chrono::seconds(5)), 2u);
    EXPECT_EQ(store.size(), 0u);
}

TEST(Store, ConcurrentStepIsBusy) {
    ServerConfig cfg;
    cfg.env.zoom_max_side = 20000;
    EpisodeStore store(cfg);
    const std::string id = store.handle(req("new_episode", "", {{"seed", 4}}))["episode_id"];
    // A deliberately slow step holds the episode while a second one arrives.
    auto slow = std::async(std::launch::async, [&] {
        return store.handle(req("step", id, {{"text", "<code>zoom_image_1 = zoom(A, 100)</code>"}}));
    });
    bool saw_busy = false;
    for (int k = 0; k < 200 && !saw_busy; ++k) {
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        const json r = store.handle(req("step", id, {{"text", "<code>b = [0, 0, 1, 1]</code>"}}));
        if (!r["ok"] && r["error_code"] == "Busy") {
            saw_busy = true;
            EXPECT_TRUE(r["retriable"]);
        }
        if (slow.wait_for(std::chrono::seconds(0)) == std::future_status::ready) break;
    }
    EXPECT_TRUE(slow.get()["ok"]);
    EXPECT_TRUE(saw_busy);
}

TEST(Wire, LoopbackMatchesInProcess) {
    ServerConfig cfg;
    cfg.env.max_turns = 10;
    Server server(cfg);
    server.start();
    WireClient client("127.0.0.1", server.port());
    for (std::uint64_t seed : {3u, 4u, 5u}) {
        const int m = seed == 5 ? 3 : 2;
        const json created = client.call(req("new_episode", "", {{"m", m}, {"level", 0}, {"seed", seed}}));
        ASSERT_TRUE(created["ok"]) << created.dump();
        const std::string id = created["episode_id"];

        Episode twin = local_twin(seed, m, 0, cfg.env);
        OracleAgent agent(twin.ground_truth());
        std::string feedback;
        while (twin.status() == EpisodeStatus::kRunning) {
            const std::string text = agent.act(view_of(twin, feedback));
            const StepOutcome local = twin.step(text);
            const json remote = client.call(req("step", id, {{"text", text}}));
            ASSERT_TRUE(remote["ok"]) << remote.dump();
            EXPECT_EQ(remote["feedback_text"], local.feedback_text);
            EXPECT_EQ(from_names(remote["state"]), twin.state());
            ASSERT_EQ(remote["images"].size(), local.new_images.size());
            for (std::size_t k = 0; k < local.new_images.size(); ++k) {
                const auto bytes = base64_decode(remote["images"][k]["png_base64"].get<std::string>());
                EXPECT_EQ(decode_png(bytes), local.new_images[k].second);
            }
            feedback = local.feedback_text;
        }
        const json final_state = client.call(req("state", id, {{"trajectory", true}}));
        EXPECT_EQ(final_state["trajectory"], trajectory_to_json(twin.trajectory()));
        EXPECT_EQ(reward_from_json(final_state["reward"]), *twin.trajectory().reward);
        EXPECT_EQ(twin.trajectory().reward->r_acc, 1);
    }
    server.stop();
}

TEST(Wire, MalformedLinesGetErrors) {
    Server server(ServerConfig{});
    server.start();
    WireClient client("127.0.0.1", server.port());
    const json r = client.call(json("just a string"));
    EXPECT_FALSE(r["ok"]);
    EXPECT_TRUE(client.call(req("health"))["ok"]);
    server.stop();
}

TEST(Http, RoutesMapToOps) {
    ServerConfig cfg;
    cfg.http_port = 0;
    Server server(cfg);
    server.start();
    ASSERT_GT(server.http_port(), 0);
    httplib::Client http("127.0.0.1", server.http_port());
    auto res = http.Post("/episodes", R"({"m": 2, "seed": 9})", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    const std::string id = json::parse(res->body)["episode_id"];
    res = http.Post("/episodes/" + id + "/step", R"({"text": "<answer>[\"A\",\"B\",\"C\",\"D\"]</answer>"})",
                    "application/json");
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(json::parse(res->body)["status"], "done");
    res = http.Post("/episodes/" + id + "/step", R"({"text": "x"})", "application/json");
    EXPECT_EQ(res->status, 409);
    res = http.Get("/episodes/" + id + "?trajectory=1");
    EXPECT_EQ(res->status, 200);
    EXPECT_TRUE(json::parse(res->body).contains("trajectory"));
    res = http.Get("/episodes/nope");
    EXPECT_EQ(res->status, 404);
    res = http.Delete("/episodes/" + id);
    EXPECT_EQ(res->status, 200);
    res = http.Get("/health");
    EXPECT_EQ(json::parse(res->body)["version"], std::string(engine_version()));
    res = http.Post("/episodes", "{not json", "application/json");
    EXPECT_EQ(res->status, 400);
    server.stop();
}

TEST(Server, BindFailureIsReported) {
    Server first(ServerConfig{});
    first.start();
    ServerConfig cfg;
    cfg.port = first.port();
    Server second(cfg);
    try {
        second.start();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kBind);
    }
}
