// jigsaw: command line front end for the jigsaw environment engine.
//
// Exit codes: 0 success, 1 validation or runtime failure, 2 usage error.

#include <csignal>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jigsaw/agents.hpp"
#include "jigsaw/codec.hpp"
#include "jigsaw/config.hpp"
#include "jigsaw/dataset.hpp"
#include "jigsaw/error.hpp"
#include "jigsaw/eval.hpp"
#include "jigsaw/grpo.hpp"
#include "jigsaw/server.hpp"
#include "jigsaw/synth.hpp"

namespace fs = std::filesystem;
using namespace jigsaw;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

void log(const std::string& msg) { std::cerr << "jigsaw: " << msg << "\n"; }

std::string percent(double frac) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * frac);
    return buf;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!item.empty()) out.push_back(std::stoi(item));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::map<std::string, double> parse_mixture(const std::string& text) {
    std::map<std::string, double> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--mixture", "expected name=fraction");
        out[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

// Cycles each (m, level) group of the manifest to exactly `count` entries,
// reseeding the repeats so every episode is distinct.
DatasetManifest expand_manifest(const DatasetManifest& in, std::size_t count, std::uint64_t seed) {
    std::map<std::pair<int, int>, std::vector<const ManifestEntry*>> groups;
    for (const ManifestEntry& e : in.entries) groups[{e.m, e.level}].push_back(&e);
    DatasetManifest out;
    for (const auto& [key, entries] : groups) {
        for (std::size_t k = 0; k < count; ++k) {
            ManifestEntry e = *entries[k % entries.size()];
            if (k >= entries.size()) {
                e.seed = derive_seed(derive_seed(seed, static_cast<std::uint64_t>(key.first * 100 + key.second)), k);
            }
            out.entries.push_back(std::move(e));
        }
    }
    return out;
}

std::vector<fs::path> trajectory_dirs(const fs::path& root) {
    if (fs::exists(root / kTrajectoryFile)) return {root};
    std::vector<fs::path> out;
    if (fs::is_directory(root)) {
        for (const auto& entry : fs::directory_iterator(root)) {
            if (entry.is_directory() && fs::exists(entry.path() / kTrajectoryFile)) out.push_back(entry.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

GradientBug parse_bug(const std::string& name) {
    if (name == "none") return GradientBug::kNone;
    if (name == "ignore-clip") return GradientBug::kIgnoreClip;
    if (name == "no-softmax") return GradientBug::kNoSoftmaxTerm;
    throw CLI::ValidationError("--inject-bug", "expected none, ignore-clip or no-softmax");
}

struct Common {
    std::string config_path;
    RunConfig load() const {
        return config_path.empty() ? RunConfig{} : load_run_config(config_path);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interactive jigsaw environment: puzzle synthesis, evaluation, replay and serving."};
    app.require_subcommand(1);
    Common common;
    app.add_option("--config", common.config_path, "JSON run configuration (flags override it)")
        ->check(CLI::ExistingFile);

    // corpus
    auto* corpus = app.add_subcommand("corpus", "Write a synthetic image corpus");
    std::string corpus_out;
    CorpusSpec corpus_spec;
    corpus->add_option("--out", corpus_out, "Output directory")->required();
    corpus->add_option("--count", corpus_spec.count, "Number of images")->capture_default_str();
    corpus->add_option("--seed", corpus_spec.seed, "Generator seed")->required();
    corpus->add_option("--size", corpus_spec.width, "Base image side in pixels")->capture_default_str();

    // gen
    auto* gen = app.add_subcommand("gen", "Synthesize a puzzle manifest from an image corpus");
    std::string gen_corpus, gen_out, gen_levels, gen_mixture;
    SynthesisConfig gen_cfg;
    gen->add_option("--corpus", gen_corpus, "Corpus directory (categories are subdirectories)")->required();
    gen->add_option("--out", gen_out, "Manifest path (JSON lines)")->required();
    gen->add_option("--m", gen_cfg.m, "Grid order")->capture_default_str();
    gen->add_option("--levels", gen_levels, "Comma-separated levels (default 0..m*m-2)");
    gen->add_option("--per-level", gen_cfg.per_level_count, "Entries per image per level")->capture_default_str();
    gen->add_option("--seed", gen_cfg.seed, "Manifest seed")->required();
    gen->add_option("--mixture", gen_mixture, "Category fractions, e.g. a=0.4,b=0.6 (default: corpus proportions)");

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate an agent on a manifest");
    std::string eval_manifest, eval_agent = "random", eval_out, eval_save;
    std::uint64_t eval_seed = 0;
    std::size_t eval_episodes = 0;
    int eval_turns = 0, eval_jobs = 0;
    eval->add_option("--manifest", eval_manifest, "Manifest path")->required();
    eval->add_option("--agent", eval_agent, "random, oracle or greedy")->capture_default_str();
    eval->add_option("--seed", eval_seed, "Agent and resampling seed")->required();
    eval->add_option("--episodes", eval_episodes, "Episodes per (m, level), cycling manifest entries");
    eval->add_option("--max-turns", eval_turns, "Turn limit T (default from config, 5)");
    eval->add_option("--jobs", eval_jobs, "Worker threads");
    eval->add_option("--out", eval_out, "Write <out>.csv and <out>.txt");
    eval->add_option("--save-trajectories", eval_save, "Directory for per-episode trajectories");

    // replay
    auto* replay = app.add_subcommand("replay", "Validate recorded trajectories by deterministic replay");
    std::string replay_path;
    replay->add_option("path", replay_path, "Trajectory directory or a directory of them")->required();

    // filter
    auto* filter = app.add_subcommand("filter", "Apply the step and action balancing filter");
    std::string filter_path;
    filter->add_option("path", filter_path, "Directory of trajectory directories")->required();

    // solve
    auto* solve = app.add_subcommand("solve", "Run one episode with a built-in agent");
    std::string solve_image, solve_agent = "greedy", solve_out;
    int solve_m = 2, solve_level = 0, solve_turns = 0;
    std::uint64_t solve_seed = 0;
    solve->add_option("--image", solve_image, "Source PNG (default: synthetic from the seed)");
    solve->add_option("--m", solve_m, "Grid order")->capture_default_str();
    solve->add_option("--level", solve_level, "Initially correct tiles")->capture_default_str();
    solve->add_option("--seed", solve_seed, "Episode seed")->required();
    solve->add_option("--agent", solve_agent, "random, oracle or greedy")->capture_default_str();
    solve->add_option("--max-turns", solve_turns, "Turn limit T");
    solve->add_option("--out", solve_out, "Save the trajectory here");

    // serve
    auto* serve = app.add_subcommand("serve", "Serve episodes over line-framed JSON and HTTP");
    std::string serve_host, serve_manifest;
    int serve_port = -2, serve_http = -2, serve_ttl = 0, serve_side = 0;
    std::size_t serve_max = 0;
    serve->add_option("--host", serve_host, "Bind address")->envname("JIGSAW_HOST");
    serve->add_option("--port", serve_port, "Line-framed JSON port (0 = any)")->envname("JIGSAW_PORT");
    serve->add_option("--http-port", serve_http, "HTTP port (-1 disables, 0 = any)")->envname("JIGSAW_HTTP_PORT");
    serve->add_option("--ttl", serve_ttl, "Idle episode lifetime in seconds")->envname("JIGSAW_TTL");
    serve->add_option("--max-episodes", serve_max, "Concurrent episode limit")->envname("JIGSAW_MAX_EPISODES");
    serve->add_option("--feedback-max-side", serve_side, "Longest side of returned images")
        ->envname("JIGSAW_FEEDBACK_MAX_SIDE");
    serve->add_option("--corpus-manifest", serve_manifest, "Serve images listed in this manifest");

    // grpocheck
    auto* grpo = app.add_subcommand("grpocheck", "Check the GRPO gradient against finite differences");
    int grpo_seeds = 20;
    std::uint64_t grpo_first = 0;
    double grpo_h = 1e-5, grpo_tol = 1e-4, grpo_kl = -1.0;
    std::string grpo_bug = "none";
    grpo->add_option("--seeds", grpo_seeds, "Number of seeds")->capture_default_str();
    grpo->add_option("--first-seed", grpo_first, "First seed")->capture_default_str();
    grpo->add_option("--step", grpo_h, "Central difference step")->capture_default_str();
    grpo->add_option("--tolerance", grpo_tol, "Maximum relative error")->capture_default_str();
    grpo->add_option("--kl-coeff", grpo_kl, "KL coefficient (default from config)");
    grpo->add_option("--inject-bug", grpo_bug, "none, ignore-clip or no-softmax (negative control)")
        ->capture_default_str();

    // config
    auto* config = app.add_subcommand("config", "Print the effective run configuration as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        RunConfig cfg = common.load();

        if (config->parsed()) {
            std::cout << run_config_to_json(cfg).dump(2) << "\n";
            return kExitOk;
        }

        if (corpus->parsed()) {
            corpus_spec.height = corpus_spec.width;
            const auto paths = write_synthetic_corpus(corpus_out, corpus_spec);
            log("wrote " + std::to_string(paths.size()) + " images under " + corpus_out);
            return kExitOk;
        }

        if (gen->parsed()) {
            if (!gen_levels.empty()) gen_cfg.levels = parse_int_list(gen_levels);
            if (!gen_mixture.empty()) gen_cfg.mixture = parse_mixture(gen_mixture);
            const SynthesisResult res = synthesize_puzzles(gen_corpus, gen_cfg);
            for (const auto& w : res.warnings) log("warning: " + w);
            write_manifest(gen_out, res.manifest);
            std::cout << "entries: " << res.manifest.entries.size() << "\n";
            for (const auto& [cat, frac] : res.manifest.mixture()) {
                std::cout << "  " << cat << ": " << percent(frac) << "\n";
            }
            return kExitOk;
        }

        if (eval->parsed()) {
            EvalOptions opts;
            try {
                opts.agent = agent_kind_from_string(eval_agent);
            } catch (const Error& e) {
                log(e.what());
                return kExitUsage;
            }
            opts.agent_seed = eval_seed;
            opts.env = cfg.env;
            if (eval_turns > 0) opts.env.max_turns = eval_turns;
            opts.greedy = cfg.greedy;
            opts.jobs = eval_jobs > 0 ? eval_jobs : cfg.jobs;
            DatasetManifest manifest = read_manifest(eval_manifest);
            if (eval_episodes > 0) manifest = expand_manifest(manifest, eval_episodes, eval_seed);
            if (!eval_save.empty()) {
                fs::create_directories(eval_save);
                opts.on_trajectory = [&](std::size_t i, const Trajectory& t) {
                    char name[32];
                    std::snprintf(name, sizeof name, "ep_%06zu", i);
                    save_trajectory(fs::path(eval_save) / name, t);
                };
            }
            const auto records = evaluate(manifest, opts);
            const Report rep = emit_report(records, eval_agent);
            std::cout << rep.text;
            if (!eval_out.empty()) {
                write_file_atomic(eval_out + ".csv", rep.csv);
                write_file_atomic(eval_out + ".txt", rep.text);
            }
            return kExitOk;
        }

        if (replay->parsed()) {
            const auto dirs = trajectory_dirs(replay_path);
            if (dirs.empty()) {
                log("no trajectories found under " + replay_path);
                return kExitFail;
            }
            int bad = 0;
            for (const auto& dir : dirs) {
                try {
                    const ReplayReport rep = validate_trajectory(dir);
                    std::cout << (rep.clean() ? "OK       " : "DIVERGED ") << dir.string() << "\n";
                    for (const auto& d : rep.divergences) std::cout << "  " << d << "\n";
                    for (const auto& n : rep.format_notes) std::cout << "  note: " << n << "\n";
                    if (!rep.clean()) ++bad;
                } catch (const Error& e) {
                    std::cout << "INVALID  " << dir.string() << "\n  " << to_string(e.code()) << ": "
                              << e.what() << "\n";
                    ++bad;
                }
            }
            std::cout << dirs.size() - static_cast<std::size_t>(bad) << "/" << dirs.size()
                      << " trajectories replay cleanly\n";
            return bad == 0 ? kExitOk : kExitFail;
        }

        if (filter->parsed()) {
            const auto dirs = trajectory_dirs(filter_path);
            std::vector<Trajectory> trajs;
            for (const auto& d : dirs) trajs.push_back(load_trajectory(d));
            const FilterResult res = filter_trajectories(trajs, cfg.filter);
            for (std::size_t i : res.kept) std::cout << "kept     " << dirs[i].string() << "\n";
            for (const auto& [i, why] : res.rejected) {
                std::cout << "rejected " << dirs[i].string() << ": " << why << "\n";
            }
            for (const auto& [kind, frac] : res.kind_coverage) {
                std::cout << "coverage " << to_string(kind) << ": " << percent(frac) << "\n";
            }
            for (const auto& w : res.warnings) log("warning: " + w);
            return kExitOk;
        }

        if (solve->parsed()) {
            AgentKind kind;
            try {
                kind = agent_kind_from_string(solve_agent);
            } catch (const Error& e) {
                log(e.what());
                return kExitUsage;
            }
            EnvConfig env = cfg.env;
            if (solve_turns > 0) env.max_turns = solve_turns;
            const Image source = solve_image.empty()
                                     ? synthesize_image(SynthKind::kTexture, 96, 96, solve_seed)
                                     : read_png(solve_image);
            Episode ep(source, EpisodeParams{solve_m, DifficultyLevel{solve_level}, solve_seed, env,
                                             solve_image.empty() ? "synthetic:" + std::to_string(solve_seed)
                                                                 : solve_image});
            auto agent = make_agent(kind, ep, solve_seed, cfg.greedy);
            run_episode(ep, *agent);
            for (const Message& m : ep.trajectory().messages) {
                if (m.role == Role::kSystem) continue;
                std::cout << "[" << to_string(m.role) << "]\n" << m.text << "\n\n";
            }
            const Trajectory& t = ep.trajectory();
            std::cout << "status: " << to_string(t.status) << "\n";
            if (t.reward) std::cout << "reward: " << reward_to_json(*t.reward).dump() << "\n";
            if (!solve_out.empty()) save_trajectory(solve_out, t);
            return kExitOk;
        }

        if (serve->parsed()) {
            ServerConfig sc = cfg.server;
            if (!serve_host.empty()) sc.host = serve_host;
            if (serve_port != -2) sc.port = serve_port;
            if (serve_http != -2) sc.http_port = serve_http;
            if (serve_ttl > 0) sc.ttl_seconds = serve_ttl;
            if (serve_max > 0) sc.max_episodes = serve_max;
            if (serve_side > 0) sc.env.feedback_max_side = serve_side;
            if (!serve_manifest.empty()) {
                std::set<std::string> paths;
                for (const auto& e : read_manifest(serve_manifest).entries) paths.insert(e.image_path);
                sc.corpus.assign(paths.begin(), paths.end());
            }
            // Signals are taken synchronously by this thread; workers never see them.
            sigset_t signals;
            sigemptyset(&signals);
            sigaddset(&signals, SIGINT);
            sigaddset(&signals, SIGTERM);
            pthread_sigmask(SIG_BLOCK, &signals, nullptr);
            Server server(sc);
            server.start();
            std::cout << "{\"port\":" << server.port() << ",\"http_port\":" << server.http_port()
                      << ",\"config_hash\":\"" << config_hash(sc) << "\"}" << std::endl;
            log("serving on " + sc.host + ":" + std::to_string(server.port()));
            int sig = 0;
            sigwait(&signals, &sig);
            log("signal " + std::to_string(sig) + ", draining");
            server.stop();
            return kExitOk;
        }

        if (grpo->parsed()) {
            GrpoConfig gc = cfg.grpo;
            if (grpo_kl >= 0.0) gc.kl_coeff = grpo_kl;
            const GradientBug bug = parse_bug(grpo_bug);
            double worst = 0.0;
            for (int s = 0; s < grpo_seeds; ++s) {
                const GradCheck r =
                    finite_difference_check(grpo_first + static_cast<std::uint64_t>(s), gc, grpo_h, bug);
                worst = std::max(worst, r.max_rel_error);
            }
            char line[160];
            std::snprintf(line, sizeof line, "max relative error %.3e over %d seeds (tolerance %.1e): %s",
                          worst, grpo_seeds, grpo_tol, worst <= grpo_tol ? "PASS" : "FAIL");
            std::cout << line << "\n";
            return worst <= grpo_tol ? kExitOk : kExitFail;
        }
    } catch (const CLI::ValidationError& e) {
        log(e.what());
        return kExitUsage;
    } catch (const Error& e) {
        log(std::string(to_string(e.code())) + ": " + e.what());
        return kExitFail;
    } catch (const std::exception& e) {
        log(e.what());
        return kExitFail;
    }
    return kExitUsage;
}
