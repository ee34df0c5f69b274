#include "jigsaw/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "jigsaw/codec.hpp"
#include "jigsaw/env.hpp"
#include "jigsaw/error.hpp"
#include "jigsaw/rng.hpp"

namespace jigsaw {

using nlohmann::json;

namespace {

std::string percent(double frac) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * frac);
    return buf;
}

}  // namespace

std::vector<std::size_t> largest_remainder(std::size_t total, const std::vector<double>& weights) {
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw Error(ErrorCode::kInvalidConfig, "mixture weights must be finite and >= 0");
        }
        sum += w;
    }
    if (weights.empty() || sum <= 0.0) {
        throw Error(ErrorCode::kInvalidConfig, "mixture weights must have a positive sum");
    }
    std::vector<std::size_t> shares(weights.size(), 0);
    std::vector<double> remainder(weights.size(), 0.0);
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        const double quota = static_cast<double>(total) * weights[k] / sum;
        shares[k] = static_cast<std::size_t>(std::floor(quota));
        remainder[k] = quota - static_cast<double>(shares[k]);
        assigned += shares[k];
    }
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++shares[order[k % order.size()]];
    return shares;
}

std::map<std::string, double> DatasetManifest::mixture() const {
    std::map<std::string, double> out;
    if (entries.empty()) return out;
    for (const ManifestEntry& e : entries) out[e.category_tag] += 1.0;
    for (auto& [_, v] : out) v /= static_cast<double>(entries.size());
    return out;
}

json manifest_entry_to_json(const ManifestEntry& e) {
    return json{{"image_path", e.image_path},
                {"m", e.m},
                {"level", e.level},
                {"seed", e.seed},
                {"category_tag", e.category_tag}};
}

ManifestEntry manifest_entry_from_json(const json& j) {
    static const std::set<std::string> keys{"image_path", "m", "level", "seed", "category_tag"};
    if (!j.is_object()) throw Error(ErrorCode::kSchema, "manifest entry must be an object");
    for (const auto& item : j.items()) {
        if (!keys.contains(item.key())) {
            throw Error(ErrorCode::kSchema, "unknown manifest key '" + item.key() + "'");
        }
    }
    try {
        return ManifestEntry{j.at("image_path").get<std::string>(), j.at("m").get<int>(),
                             j.at("level").get<int>(), j.at("seed").get<std::uint64_t>(),
                             j.at("category_tag").get<std::string>()};
    } catch (const json::exception& e) {
        throw Error(ErrorCode::kSchema, std::string("manifest entry: ") + e.what());
    }
}

std::string manifest_to_jsonl(const DatasetManifest& manifest) {
    std::string out;
    for (const ManifestEntry& e : manifest.entries) {
        out += manifest_entry_to_json(e).dump();
        out += '\n';
    }
    return out;
}

DatasetManifest manifest_from_jsonl(std::string_view text) {
    DatasetManifest m;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            m.entries.push_back(manifest_entry_from_json(json::parse(line)));
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::kSchema,
                        "manifest line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    write_file_atomic(path, manifest_to_jsonl(manifest));
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    return manifest_from_jsonl(read_file(path));
}

std::vector<CorpusImage> list_corpus(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw Error(ErrorCode::kEmptyCorpus, "corpus directory not found: " + dir.string());
    }
    std::vector<CorpusImage> out;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ext != ".png") continue;
        const fs::path rel = entry.path().lexically_relative(dir);
        const bool nested = std::distance(rel.begin(), rel.end()) > 1;
        out.push_back(CorpusImage{entry.path().generic_string(),
                                  nested ? rel.begin()->string() : std::string(kUncategorized)});
    }
    std::sort(out.begin(), out.end(),
              [](const CorpusImage& a, const CorpusImage& b) { return a.path < b.path; });
    return out;
}

std::vector<int> default_levels(int m) {
    std::vector<int> levels;
    for (int l = 0; l <= m * m - 2; ++l) levels.push_back(l);
    return levels;
}

SynthesisResult synthesize_puzzles(const std::filesystem::path& image_dir,
                                   const SynthesisConfig& cfg) {
    if (cfg.m < 2 || cfg.m > kMaxGridOrder) {
        throw Error(ErrorCode::kInvalidSize, "grid order must be in 2.." + std::to_string(kMaxGridOrder));
    }
    if (cfg.per_level_count < 1) throw Error(ErrorCode::kInvalidConfig, "per_level_count must be >= 1");
    const std::vector<int> levels = cfg.levels.empty() ? default_levels(cfg.m) : cfg.levels;
    const auto n = static_cast<std::size_t>(cfg.m * cfg.m);
    for (int level : levels) validate_level(n, DifficultyLevel{level});

    SynthesisResult result;
    std::map<std::string, std::vector<std::string>> by_category;
    std::size_t usable = 0;
    for (const CorpusImage& img : list_corpus(image_dir)) {
        try {
            const Image decoded = read_png(img.path);
            if (decoded.width < cfg.m || decoded.height < cfg.m) {
                result.warnings.push_back("skipping " + img.path + ": smaller than the grid");
                continue;
            }
        } catch (const Error& e) {
            result.warnings.push_back("skipping " + img.path + ": " + e.what());
            continue;
        }
        by_category[img.category].push_back(img.path);
        ++usable;
    }
    if (usable == 0) {
        throw Error(ErrorCode::kEmptyCorpus, "no decodable images under " + image_dir.string());
    }

    std::vector<std::string> names;
    std::vector<double> weights;
    if (cfg.mixture.empty()) {
        for (const auto& [name, paths] : by_category) {
            names.push_back(name);
            weights.push_back(static_cast<double>(paths.size()));
        }
    } else {
        for (const auto& [name, w] : cfg.mixture) {
            if (w > 0.0 && !by_category.contains(name)) {
                throw Error(ErrorCode::kInvalidConfig, "mixture category '" + name + "' has no images");
            }
            names.push_back(name);
            weights.push_back(w);
        }
        for (const auto& [name, _] : by_category) {
            if (!cfg.mixture.contains(name)) {
                result.warnings.push_back("category '" + name + "' is not in the mixture; ignored");
            }
        }
    }

    const std::size_t per_level = usable * static_cast<std::size_t>(cfg.per_level_count);
    const std::vector<std::size_t> quotas = largest_remainder(per_level, weights);
    std::set<std::pair<std::string, std::uint64_t>> seen;
    for (int level : levels) {
        const std::uint64_t level_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(level));
        std::uint64_t index = 0;
        for (std::size_t c = 0; c < names.size(); ++c) {
            if (quotas[c] == 0) continue;
            // Seeded order within the category so a partial quota is not
            // biased toward the first files.
            std::vector<std::string> pool = by_category.at(names[c]);
            Rng rng(derive_seed(level_seed, 0x5eed0000ULL + c));
            for (std::size_t k = pool.size(); k > 1; --k) {
                std::swap(pool[k - 1], pool[uniform_below(rng, k)]);
            }
            for (std::size_t k = 0; k < quotas[c]; ++k, ++index) {
                ManifestEntry e{pool[k % pool.size()], cfg.m, level, derive_seed(level_seed, index),
                                names[c]};
                while (!seen.emplace(e.image_path + "#" + std::to_string(level), e.seed).second) {
                    e.seed = splitmix64(e.seed);
                }
                result.manifest.entries.push_back(std::move(e));
            }
        }
    }
    return result;
}

// ─── Filtering ─────────────────────────────────────────────────

std::string_view to_string(ActionKind kind) {
    switch (kind) {
        case ActionKind::kSwap: return "swap";
        case ActionKind::kObserve: return "observe";
        case ActionKind::kCrop: return "crop";
        case ActionKind::kZoom: return "zoom";
    }
    return "?";
}

void BalanceFilterConfig::validate() const {
    if (step_min > step_max_keep) {
        throw Error(ErrorCode::kInvalidConfig, "step_min must not exceed step_max_keep");
    }
    if (!(min_kind_fraction >= 0.0 && min_kind_fraction <= 1.0)) {
        throw Error(ErrorCode::kInvalidConfig, "min_kind_fraction must lie in [0, 1]");
    }
}

std::vector<ActionKind> action_kinds(const Trajectory& traj) {
    std::set<ActionKind> kinds;
    for (const Message& msg : traj.messages) {
        if (msg.role != Role::kAssistant) continue;
        const TaggedResponse tags = extract_tags(msg.text);
        if (tags.has_answer() || !tags.has_code()) continue;
        std::string code;
        for (const std::string& block : tags.code_blocks) code += block + "\n";
        try {
            for (const Statement& s : parse_program(code).statements) {
                if (std::holds_alternative<SwapStmt>(s)) kinds.insert(ActionKind::kSwap);
                if (std::holds_alternative<ObserveStmt>(s)) kinds.insert(ActionKind::kObserve);
                if (std::holds_alternative<CropStmt>(s)) kinds.insert(ActionKind::kCrop);
                if (std::holds_alternative<ZoomStmt>(s)) kinds.insert(ActionKind::kZoom);
            }
        } catch (const Error&) {
            // Unparseable turns executed nothing.
        }
    }
    return {kinds.begin(), kinds.end()};
}

FilterResult filter_trajectories(const std::vector<Trajectory>& trajs,
                                 const BalanceFilterConfig& cfg) {
    cfg.validate();
    FilterResult out;
    std::map<ActionKind, std::size_t> counts;
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        const Trajectory& t = trajs[i];
        if (!t.reward || t.reward->r_acc != 1) {
            out.rejected.emplace_back(i, "accuracy 0");
        } else if (t.executed_turns < cfg.step_min) {
            out.rejected.emplace_back(i, "below step_min (" + std::to_string(t.executed_turns) +
                                             " < " + std::to_string(cfg.step_min) + ")");
        } else if (t.executed_turns > cfg.step_max_keep) {
            out.rejected.emplace_back(i, "above step_max_keep (" +
                                             std::to_string(t.executed_turns) + " > " +
                                             std::to_string(cfg.step_max_keep) + ")");
        } else {
            out.kept.push_back(i);
            for (ActionKind k : action_kinds(t)) ++counts[k];
        }
    }
    for (ActionKind k : cfg.required_action_kinds) {
        const double frac = out.kept.empty() ? 0.0
                                             : static_cast<double>(counts[k]) /
                                                   static_cast<double>(out.kept.size());
        out.kind_coverage[k] = frac;
        if (frac < cfg.min_kind_fraction) {
            out.warnings.push_back(std::string(to_string(k)) + " appears in " +
                                   percent(frac) + " of kept trajectories (< " + percent(cfg.min_kind_fraction) + ")");
        }
    }
    return out;
}

// ─── Replay ────────────────────────────────────────────────────

namespace {

std::string where(const std::vector<Message>& msgs, std::size_t index) {
    if (index == 0) return "system prompt";
    if (index == 1) return "user prompt";
    int turn = 0;
    for (std::size_t k = 2; k <= index && k < msgs.size(); ++k) {
        if (msgs[k].role == Role::kAssistant) ++turn;
    }
    return "turn " + std::to_string(turn) + " (" + std::string(to_string(msgs[index].role)) +
           " message)";
}

std::string describe(const RewardBreakdown& r) {
    return "total=" + format_number(r.total) + " r_acc=" + std::to_string(r.r_acc) +
           " r_format=" + std::to_string(r.r_format) + " r_step=" + format_number(r.r_step) +
           " step_num=" + std::to_string(r.step_num);
}

}  // namespace

ReplayReport replay_trajectory(const Trajectory& traj) {
    ReplayReport report;
    const auto source = traj.images.find(kSourceImageName);
    if (source == traj.images.end()) {
        report.divergences.emplace_back("source image is missing");
        return report;
    }
    const TrajectoryMetadata& md = traj.metadata;
    std::optional<Episode> ep;
    try {
        ep.emplace(source->second, EpisodeParams{md.m, DifficultyLevel{md.level}, md.seed,
                                                 md.config, md.source_image_id});
    } catch (const Error& e) {
        report.divergences.push_back(std::string("cannot rebuild episode: ") + e.what());
        return report;
    }
    if (ep->ground_truth().label_names() != md.gt_labels) {
        report.divergences.emplace_back("ground truth differs from the seeded shuffle");
    }

    int turn = 0;
    for (std::size_t k = 2; k < traj.messages.size(); ++k) {
        const Message& msg = traj.messages[k];
        if (msg.role != Role::kAssistant) continue;
        ++turn;
        const TaggedResponse tags = extract_tags(msg.text);
        for (const std::string& v : tags.violations) {
            report.format_notes.push_back("turn " + std::to_string(turn) + ": " + v);
        }
        try {
            ep->step(msg.text);
        } catch (const Error& e) {
            report.divergences.push_back("turn " + std::to_string(turn) + ": replay failed: " +
                                         e.what());
            break;
        }
    }

    const Trajectory& rebuilt = ep->trajectory();
    const std::size_t common = std::min(rebuilt.messages.size(), traj.messages.size());
    for (std::size_t k = 0; k < common; ++k) {
        const Message& want = rebuilt.messages[k];
        const Message& got = traj.messages[k];
        if (want.role != got.role) {
            report.divergences.push_back(where(traj.messages, k) + ": role differs (recorded " +
                                         std::string(to_string(got.role)) + ", replayed " +
                                         std::string(to_string(want.role)) + ")");
        } else if (want.text != got.text) {
            report.divergences.push_back(where(traj.messages, k) + ": text differs");
        } else if (want.image_refs != got.image_refs) {
            report.divergences.push_back(where(traj.messages, k) + ": image references differ");
        }
    }
    if (rebuilt.messages.size() != traj.messages.size()) {
        report.divergences.push_back("message count differs (recorded " +
                                     std::to_string(traj.messages.size()) + ", replayed " +
                                     std::to_string(rebuilt.messages.size()) + ")");
    }
    for (const auto& [name, img] : rebuilt.images) {
        const auto it = traj.images.find(name);
        if (it == traj.images.end()) {
            report.divergences.push_back("image '" + name + "' is missing");
        } else if (it->second != img) {
            report.divergences.push_back("image '" + name + "' pixels differ");
        }
    }
    for (const auto& [name, _] : traj.images) {
        if (!rebuilt.images.contains(name)) {
            report.divergences.push_back("image '" + name + "' was not produced by the replay");
        }
    }
    if (rebuilt.status != traj.status) {
        report.divergences.push_back("status differs (recorded " +
                                     std::string(to_string(traj.status)) + ", replayed " +
                                     std::string(to_string(rebuilt.status)) + ")");
    }
    if (rebuilt.executed_turns != traj.executed_turns) {
        report.divergences.push_back("executed_turns differs (recorded " +
                                     std::to_string(traj.executed_turns) + ", replayed " +
                                     std::to_string(rebuilt.executed_turns) + ")");
    }
    if (rebuilt.metadata.answer != md.answer) report.divergences.emplace_back("answer differs");
    if (rebuilt.metadata.score != md.score) {
        report.divergences.push_back("score differs (recorded " + format_number(md.score) +
                                     ", replayed " + format_number(rebuilt.metadata.score) + ")");
    }
    if (rebuilt.reward != traj.reward) {
        report.divergences.push_back(
            "reward mismatch (recorded " + (traj.reward ? describe(*traj.reward) : "null") +
            ", replayed " + (rebuilt.reward ? describe(*rebuilt.reward) : "null") + ")");
    }
    report.recomputed = rebuilt.reward;
    return report;
}

ReplayReport validate_trajectory(const std::filesystem::path& dir) {
    return replay_trajectory(load_trajectory(dir));
}

}  // namespace jigsaw
