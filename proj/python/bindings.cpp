#include <cstring>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "jigsaw/action.hpp"
#include "jigsaw/agents.hpp"
#include "jigsaw/codec.hpp"
#include "jigsaw/config.hpp"
#include "jigsaw/dataset.hpp"
#include "jigsaw/env.hpp"
#include "jigsaw/error.hpp"
#include "jigsaw/grpo.hpp"
#include "jigsaw/perm.hpp"
#include "jigsaw/reward.hpp"
#include "jigsaw/server.hpp"
#include "jigsaw/trajectory.hpp"

namespace py = pybind11;
using namespace jigsaw;

namespace {

using PixelArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

py::array_t<std::uint8_t> to_numpy(const Image& img) {
    py::array_t<std::uint8_t> out({img.height, img.width, Image::kChannels});
    std::memcpy(out.mutable_data(), img.pixels.data(), img.pixels.size());
    return out;
}

Image from_numpy(const PixelArray& arr) {
    if (arr.ndim() != 3 || arr.shape(2) != Image::kChannels) {
        throw Error(ErrorCode::kInvalidSize, "expected an HxWx3 uint8 array");
    }
    const auto h = static_cast<int>(arr.shape(0));
    const auto w = static_cast<int>(arr.shape(1));
    std::vector<std::uint8_t> data(arr.data(), arr.data() + arr.size());
    return Image(w, h, std::move(data));
}

py::dict reward_dict(const RewardBreakdown& r) {
    py::dict d;
    d["r_acc"] = r.r_acc;
    d["r_format"] = r.r_format;
    d["r_step"] = r.r_step;
    d["total"] = r.total;
    d["step_num"] = r.step_num;
    return d;
}

py::dict images_dict(const std::vector<NamedImage>& images) {
    py::dict d;
    for (const auto& [name, img] : images) d[py::str(name)] = to_numpy(img);
    return d;
}

EnvConfig env_config(int max_turns, int feedback_max_side) {
    EnvConfig cfg;
    cfg.max_turns = max_turns;
    cfg.feedback_max_side = feedback_max_side;
    cfg.validate();
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Interactive jigsaw environment engine";
    m.attr("__version__") = std::string(engine_version());
    m.attr("WIRE_VERSION") = kWireVersion;

    static py::exception<Error> error_type(m, "JigsawError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::handle(error_type.ptr())(py::str(e.what()));
            exc.attr("code") = py::str(std::string(to_string(e.code())));
            PyErr_SetObject(error_type.ptr(), exc.ptr());
        }
    });

    // ─── Permutations ──────────────────────────────────────────
    m.def("label_name", &label_name);
    m.def(
        "sample_with_fixed_points",
        [](std::size_t n, int n_correct, std::uint64_t seed) {
            Rng rng(seed);
            return sample_with_fixed_points(n, n_correct, rng).slots();
        },
        py::arg("n"), py::arg("n_correct"), py::arg("seed"));
    m.def(
        "min_swap_distance",
        [](const std::vector<Label>& state, const std::vector<Label>& gt) {
            return min_swap_distance(Arrangement(state), Arrangement(gt));
        },
        py::arg("state"), py::arg("gt"));
    m.def(
        "swap_plan",
        [](const std::vector<Label>& state, const std::vector<Label>& gt) {
            return swap_plan(Arrangement(state), Arrangement(gt));
        },
        py::arg("state"), py::arg("gt"));

    // ─── Action language ───────────────────────────────────────
    m.def(
        "canonical_program", [](const std::string& code) { return render_program(parse_program(code)); },
        py::arg("code"), "Parses an action program and renders it in canonical form.");
    m.def(
        "check_program",
        [](const std::string& code) -> py::object {
            try {
                parse_program(code);
            } catch (const ParseError& e) {
                py::dict d;
                d["code"] = std::string(to_string(e.code()));
                d["line"] = e.line();
                d["column"] = e.column();
                d["message"] = std::string(e.what());
                return std::move(d);
            }
            return py::none();
        },
        py::arg("code"), "Returns None for a valid program, else a diagnostic dict.");
    m.def(
        "parse_answer",
        [](const std::string& answer, std::size_t n) { return parse_answer(answer, n).label_names(); },
        py::arg("answer"), py::arg("n"));

    // ─── Rewards and GRPO ──────────────────────────────────────
    m.def(
        "total_reward",
        [](int r_acc, int r_format, int step_num, double alpha, double beta_fmt, double gamma, double lambda,
           int step_max) {
            RewardConfig cfg{alpha, beta_fmt, gamma, lambda, step_max};
            cfg.validate();
            return reward_dict(total_reward(r_acc, r_format, step_num, cfg));
        },
        py::arg("r_acc"), py::arg("r_format"), py::arg("step_num"), py::arg("alpha") = 0.8,
        py::arg("beta_fmt") = 0.2, py::arg("gamma") = 1.0, py::arg("lam") = -0.05, py::arg("step_max") = 5);
    m.def(
        "group_advantages",
        [](const std::vector<double>& rewards, bool mean_only) {
            GrpoConfig cfg;
            cfg.norm = mean_only ? AdvantageNorm::kMeanOnly : AdvantageNorm::kMeanStd;
            return group_advantages(rewards, cfg);
        },
        py::arg("rewards"), py::arg("mean_only") = false);
    m.def(
        "gradient_check",
        [](std::uint64_t seed, double kl_coeff, double h) {
            GrpoConfig cfg;
            cfg.kl_coeff = kl_coeff;
            const GradCheck g = finite_difference_check(seed, cfg, h);
            py::dict d;
            d["max_rel_error"] = g.max_rel_error;
            d["objective"] = g.objective;
            d["clipped_tokens"] = g.clipped_tokens;
            return d;
        },
        py::arg("seed"), py::arg("kl_coeff") = 0.0, py::arg("h") = 1e-5);

    // ─── Episodes ──────────────────────────────────────────────
    py::class_<Episode>(m, "Episode")
        .def(py::init([](const PixelArray& image, int m, int level, std::uint64_t seed, int max_turns,
                         int feedback_max_side, std::string source_id) {
                 return new_episode(from_numpy(image), m, DifficultyLevel{level}, seed,
                                    env_config(max_turns, feedback_max_side), std::move(source_id));
             }),
             py::arg("image"), py::arg("m") = 2, py::arg("level") = 0, py::arg("seed") = 0, py::arg("max_turns") = 5,
             py::arg("feedback_max_side") = 1024, py::arg("source_id") = "")
        .def_static(
            "from_png",
            [](const std::filesystem::path& path, int m, int level, std::uint64_t seed, int max_turns) {
                return new_episode(read_png(path), m, DifficultyLevel{level}, seed, env_config(max_turns, 1024),
                                   path.string());
            },
            py::arg("path"), py::arg("m") = 2, py::arg("level") = 0, py::arg("seed") = 0, py::arg("max_turns") = 5)
        .def(
            "step",
            [](Episode& ep, const std::string& text) {
                StepOutcome out;
                {
                    py::gil_scoped_release release;
                    out = ep.step(text);
                }
                py::dict d;
                d["status"] = std::string(to_string(out.status));
                d["feedback_text"] = out.feedback_text;
                d["images"] = images_dict(out.new_images);
                d["reward"] = out.reward ? py::object(reward_dict(*out.reward)) : py::none();
                return d;
            },
            py::arg("text"))
        .def("abort", &Episode::abort)
        .def_property_readonly("m", [](const Episode& ep) { return ep.trajectory().metadata.m; })
        .def_property_readonly("turn", &Episode::turn)
        .def_property_readonly("status", [](const Episode& ep) { return std::string(to_string(ep.status())); })
        .def_property_readonly("state", [](const Episode& ep) { return ep.state().label_names(); })
        .def_property_readonly("ground_truth", [](const Episode& ep) { return ep.ground_truth().label_names(); })
        .def_property_readonly("system_prompt", [](const Episode& ep) { return ep.trajectory().messages.at(0).text; })
        .def_property_readonly("user_prompt", [](const Episode& ep) { return ep.trajectory().messages.at(1).text; })
        .def("tiles", [](const Episode& ep) { return images_dict(ep.tile_images()); })
        .def("image", [](const Episode& ep, const std::string& name) { return to_numpy(ep.registry().at(name)); })
        .def("trajectory_json", [](const Episode& ep) { return trajectory_to_json(ep.trajectory()).dump(); })
        .def("save", [](const Episode& ep, const std::filesystem::path& dir) { save_trajectory(dir, ep.trajectory()); });

    m.def(
        "run_agent",
        [](Episode& ep, const std::string& kind, std::uint64_t seed) {
            auto agent = make_agent(agent_kind_from_string(kind), ep, seed);
            py::gil_scoped_release release;
            run_episode(ep, *agent);
        },
        py::arg("episode"), py::arg("agent"), py::arg("seed") = 0,
        "Drives the episode to completion with a built-in agent (random, oracle or greedy).");

    m.def(
        "replay",
        [](const std::filesystem::path& dir) {
            const ReplayReport rep = validate_trajectory(dir);
            py::dict d;
            d["clean"] = rep.clean();
            d["divergences"] = rep.divergences;
            d["reward"] = rep.recomputed ? py::object(reward_dict(*rep.recomputed)) : py::none();
            return d;
        },
        py::arg("path"), "Replays a saved trajectory directory and reports divergences.");

    m.def(
        "default_config", [] { return run_config_to_json(RunConfig{}).dump(); },
        "The default run configuration as JSON text.");
    m.def(
        "check_config", [](const std::string& text) { return run_config_to_json(run_config_from_json(nlohmann::json::parse(text))).dump(); },
        py::arg("text"), "Validates a run configuration and returns the effective one.");

    // ─── Server ────────────────────────────────────────────────
    py::class_<Server>(m, "Server")
        .def(py::init([](int port, int max_episodes, int max_turns) {
                 ServerConfig cfg;
                 cfg.port = port;
                 cfg.max_episodes = static_cast<std::size_t>(max_episodes);
                 cfg.env = env_config(max_turns, 1024);
                 return std::make_unique<Server>(cfg);
             }),
             py::arg("port") = 0, py::arg("max_episodes") = 1024, py::arg("max_turns") = 5)
        .def("start", &Server::start, py::call_guard<py::gil_scoped_release>())
        .def("stop", &Server::stop, py::call_guard<py::gil_scoped_release>())
        .def_property_readonly("port", &Server::port);
}
