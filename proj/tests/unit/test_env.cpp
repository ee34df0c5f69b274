#include <gtest/gtest.h>

#include "jigsaw/dataset.hpp"
#include "jigsaw/env.hpp"
#include "jigsaw/error.hpp"
#include "test_support.hpp"

using namespace jigsaw;
using jigsaw::testing::diagonal_image;

namespace {

std::string code(const std::string& body) { return "<think>t</think>\n<code>\n" + body + "\n</code>"; }
std::string answer(const Arrangement& a) { return "<think>t</think>\n<answer>" + a.to_literal() + "</answer>"; }

Episode make(int m = 2, int level = 0, std::uint64_t seed = 5, EnvConfig cfg = {}) {
    return new_episode(diagonal_image(60, 48), m, DifficultyLevel{level}, seed, cfg, "test");
}

}  // namespace

TEST(Episode, InitialStateAndGroundTruth) {
    for (int m = 2; m <= 4; ++m) {
        for (int level = 0; level <= m * m - 2; level += 2) {
            const Image src = diagonal_image(60, 48);
            Episode ep = new_episode(src, m, DifficultyLevel{level}, 17, {}, "x");
            EXPECT_EQ(ep.state(), Arrangement::identity(ep.tile_count()));
            EXPECT_EQ(count_fixed_points(ep.state(), ep.ground_truth()), static_cast<std::size_t>(level));
            // Placing labels per the ground truth rebuilds the (resized) source.
            EXPECT_EQ(compose_state_image(ep.labeled_tiles(), ep.ground_truth()),
                      resize_to_multiple(src, m));
            EXPECT_EQ(ep.trajectory().messages.size(), 2u);
            EXPECT_EQ(ep.trajectory().messages[1].image_refs.size(), ep.tile_count());
        }
    }
}

TEST(Episode, SeedDeterminism) {
    Episode a = make(3, 2, 99);
    Episode b = make(3, 2, 99);
    Episode c = make(3, 2, 100);
    EXPECT_EQ(a.ground_truth(), b.ground_truth());
    EXPECT_NE(a.ground_truth(), c.ground_truth());
}

TEST(Episode, InvalidParameters) {
    EXPECT_THROW(make(2, 3), Error);
    EXPECT_THROW(make(6, 0), Error);
    EXPECT_THROW(new_episode(Image(), 2, {}, 1), Error);
    EnvConfig bad;
    bad.max_turns = 0;
    EXPECT_THROW(make(2, 0, 1, bad), Error);
}

TEST(Episode, SwapObserveCropZoom) {
    Episode ep = make();
    auto out = ep.step(code("state[0], state[1] = state[1], state[0]\nobservation_image_1 = observation(state)"));
    EXPECT_EQ(out.status, StepStatus::kContinue);
    EXPECT_EQ(ep.state(), Arrangement({1, 0, 2, 3}));
    EXPECT_EQ(ep.turn(), 1);
    ASSERT_EQ(out.new_images.size(), 1u);
    EXPECT_EQ(out.new_images[0].first, "observation_image_1");
    EXPECT_EQ(out.new_images[0].second, compose_state_image(ep.labeled_tiles(), ep.state()));
    EXPECT_NE(out.feedback_text.find("Swapped slots 0 and 1."), std::string::npos);
    EXPECT_NE(out.feedback_text.find("Current state: [\"B\", \"A\", \"C\", \"D\"]"), std::string::npos);
    EXPECT_NE(out.feedback_text.find("Turn 1 of 5."), std::string::npos);

    out = ep.step(code("box = [0, 0, 0.5, 0.5]\ncrop_image_1 = crop(observation_image_1, box)"));
    ASSERT_EQ(out.new_images.size(), 1u);
    EXPECT_EQ(out.new_images[0].second,
              crop_region(ep.registry().at("observation_image_1"), {0, 0, 0.5, 0.5}));

    // Box variables persist across turns.
    out = ep.step(code("crop_image_2 = crop(A, box)"));
    EXPECT_EQ(out.status, StepStatus::kContinue);

    out = ep.step(code("zoom_image_1 = zoom(crop_image_1, 2)"));
    ASSERT_EQ(out.new_images.size(), 1u);
    EXPECT_EQ(out.new_images[0].second, zoom_image(ep.registry().at("crop_image_1"), 2.0));
    const Message& env_msg = ep.trajectory().messages.back();
    EXPECT_EQ(env_msg.role, Role::kEnvironment);
    EXPECT_EQ(env_msg.image_refs, std::vector<std::string>{"zoom_image_1"});
}

TEST(Episode, ExecutionErrorsKeepRunning) {
    Episode ep = make();
    auto out = ep.step(code("state[0], state[7] = state[7], state[0]"));
    EXPECT_EQ(out.status, StepStatus::kError);
    EXPECT_EQ(ep.state(), Arrangement::identity(4));
    EXPECT_NE(out.feedback_text.find("Error: swap index out of range"), std::string::npos);

    out = ep.step(code("crop_image_1 = crop(observation_image_9, [0, 0, 1, 1])"));
    EXPECT_EQ(out.status, StepStatus::kError);
    EXPECT_NE(out.feedback_text.find("unknown image 'observation_image_9'"), std::string::npos);

    out = ep.step(code("observation_image_1 = observation(state)\nobservation_image_2 = observation(state)"));
    EXPECT_EQ(out.status, StepStatus::kError);
    EXPECT_TRUE(out.new_images.empty());

    out = ep.step("no tags at all");
    EXPECT_EQ(out.status, StepStatus::kError);
    EXPECT_NE(out.feedback_text.find("Error: no <code> or <answer> block found."), std::string::npos);
    EXPECT_EQ(ep.status(), EpisodeStatus::kRunning);
    EXPECT_EQ(ep.turn(), 4);
}

TEST(Episode, DuplicateResultNameRejected) {
    Episode ep = make();
    ep.step(code("observation_image_1 = observation(state)"));
    const auto out = ep.step(code("observation_image_1 = observation(state)"));
    EXPECT_EQ(out.status, StepStatus::kError);
    EXPECT_NE(out.feedback_text.find("already exists"), std::string::npos);
}

TEST(Episode, CorrectAnswerEndsEpisode) {
    Episode ep = make(2, 0, 8);
    ep.step(code("observation_image_1 = observation(state)"));
    const auto out = ep.step(answer(ep.ground_truth()));
    EXPECT_EQ(out.status, StepStatus::kDone);
    ASSERT_TRUE(out.reward.has_value());
    EXPECT_EQ(out.reward->r_acc, 1);
    EXPECT_EQ(out.reward->r_format, 1);
    EXPECT_EQ(out.reward->step_num, 1);
    EXPECT_NEAR(out.reward->total, 0.95, 1e-12);
    EXPECT_EQ(ep.status(), EpisodeStatus::kAnswered);
    EXPECT_EQ(ep.trajectory().metadata.score, 1.0);
    // The answer turn is the last message; nothing is appended after it.
    EXPECT_EQ(ep.trajectory().messages.back().role, Role::kAssistant);
    try {
        ep.step(code("observation_image_2 = observation(state)"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kEpisodeFinished);
    }
}

TEST(Episode, WrongAnswerScore) {
    Episode ep = make(2, 2, 3);
    // Level 2: the identity already has two tiles right.
    const auto out = ep.step(answer(Arrangement::identity(4)));
    EXPECT_EQ(out.reward->r_acc, 0);
    EXPECT_DOUBLE_EQ(ep.trajectory().metadata.score, 0.5);
    EXPECT_NEAR(out.reward->total, 0.2 - 0.25, 1e-12);
}

TEST(Episode, MalformedAnswer) {
    Episode ep = make();
    const auto out = ep.step("<think>t</think><answer>[\"A\", \"A\", \"B\", \"C\"]</answer>");
    EXPECT_EQ(out.status, StepStatus::kDone);
    EXPECT_EQ(out.reward->r_acc, 0);
    EXPECT_FALSE(ep.trajectory().metadata.answer.has_value());
    EXPECT_NE(out.feedback_text.find("Error:"), std::string::npos);
}

TEST(Episode, AnswerWinsOverCode) {
    Episode ep = make();
    const auto out = ep.step("<think>t</think><code>state[0], state[1] = state[1], state[0]</code><answer>" +
                             ep.ground_truth().to_literal() + "</answer>");
    EXPECT_EQ(out.status, StepStatus::kDone);
    EXPECT_EQ(out.reward->r_acc, 1);
    EXPECT_EQ(ep.state(), Arrangement::identity(4));
    EXPECT_NE(out.feedback_text.find("Warning: code ignored"), std::string::npos);
}

TEST(Episode, TruncationAtTurnLimit) {
    EnvConfig cfg;
    cfg.max_turns = 3;
    Episode ep = make(2, 0, 5, cfg);
    ep.step(code("b = [0, 0, 1, 1]"));
    ep.step(code("b = [0, 0, 1, 1]"));
    const auto out = ep.step(code("b = [0, 0, 1, 1]"));
    EXPECT_EQ(out.status, StepStatus::kTruncated);
    EXPECT_EQ(ep.status(), EpisodeStatus::kTruncated);
    ASSERT_TRUE(out.reward);
    EXPECT_EQ(out.reward->r_acc, 0);
    EXPECT_EQ(out.reward->r_format, 1);
    EXPECT_NEAR(out.reward->r_step, -0.05 * 3, 1e-12);
    EXPECT_NE(out.feedback_text.find("Turn limit reached"), std::string::npos);
}

TEST(Episode, SwapStatementStepMode) {
    EnvConfig cfg;
    cfg.step_count_mode = StepCountMode::kSwapStatements;
    Episode ep = make(2, 0, 5, cfg);
    const auto plan = swap_plan(ep.state(), ep.ground_truth());
    std::string body;
    for (const auto& [i, j] : plan) {
        body += "state[" + std::to_string(i) + "], state[" + std::to_string(j) + "] = state[" +
                std::to_string(j) + "], state[" + std::to_string(i) + "]\n";
    }
    ep.step(code(body));
    const auto out = ep.step(answer(ep.ground_truth()));
    EXPECT_EQ(out.reward->r_acc, 1);
    EXPECT_EQ(out.reward->step_num, static_cast<int>(plan.size()));
}

TEST(Episode, Abort) {
    Episode ep = make();
    ep.abort();
    EXPECT_EQ(ep.status(), EpisodeStatus::kAborted);
    EXPECT_THROW(ep.step(code("b = [0, 0, 1, 1]")), Error);
}

TEST(Episode, FeedbackImagesAreCapped) {
    EnvConfig cfg;
    cfg.feedback_max_side = 10;
    Episode ep = make(2, 0, 5, cfg);
    const auto out = ep.step(code("observation_image_1 = observation(state)"));
    EXPECT_EQ(std::max(out.new_images[0].second.width, out.new_images[0].second.height), 10);
    // The registry keeps full resolution for later crops.
    EXPECT_EQ(ep.registry().at("observation_image_1").width, 60);
}

TEST(Trajectory, SaveLoadReplay) {
    jigsaw::testing::TempDir dir("traj");
    EnvConfig cfg;
    cfg.max_turns = 10;
    Episode ep = make(3, 1, 12, cfg);
    ep.step(code("observation_image_1 = observation(state)"));
    ep.step(code("crop_image_1 = crop(observation_image_1, [0.1, 0.1, 0.6, 0.9])"));
    ep.step(code("zoom_image_1 = zoom(crop_image_1, 1.5)"));
    ep.step(answer(ep.ground_truth()));
    save_trajectory(dir.path(), ep.trajectory());

    const Trajectory loaded = load_trajectory(dir.path());
    EXPECT_EQ(loaded.messages, ep.trajectory().messages);
    EXPECT_EQ(loaded.metadata, ep.trajectory().metadata);
    EXPECT_EQ(loaded.reward, ep.trajectory().reward);
    EXPECT_EQ(loaded.images, ep.trajectory().images);

    const ReplayReport rep = validate_trajectory(dir.path());
    EXPECT_TRUE(rep.clean());
    ASSERT_TRUE(rep.recomputed);
    EXPECT_EQ(*rep.recomputed, *ep.trajectory().reward);
}

TEST(Trajectory, TamperIsDetected) {
    Episode ep = make(2, 0, 4);
    ep.step(code("state[0], state[1] = state[1], state[0]\nobservation_image_1 = observation(state)"));
    ep.step(answer(ep.ground_truth()));
    const Trajectory& t = ep.trajectory();

    Trajectory text = t;
    text.messages[3].text[5] ^= 0x01;
    EXPECT_FALSE(replay_trajectory(text).clean());

    Trajectory reward = t;
    reward.reward->total += 1e-15;
    EXPECT_FALSE(replay_trajectory(reward).clean());

    Trajectory pixels = t;
    pixels.images.at("observation_image_1").pixels[7] ^= 0x01;
    EXPECT_FALSE(replay_trajectory(pixels).clean());

    EXPECT_TRUE(replay_trajectory(t).clean());
}

TEST(Trajectory, SchemaRejectsUnknownKeys) {
    Episode ep = make();
    nlohmann::json j = trajectory_to_json(ep.trajectory());
    j["unexpected"] = 1;
    EXPECT_THROW(trajectory_from_json(j), Error);
}
