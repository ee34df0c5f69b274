#include "jigsaw/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "jigsaw/codec.hpp"
#include "jigsaw/error.hpp"

namespace jigsaw {

std::vector<EpisodeResult> run_manifest(const DatasetManifest& manifest, const EvalOptions& opts) {
    opts.env.validate();
    std::map<std::string, Image> cache;
    for (const ManifestEntry& e : manifest.entries) {
        if (!cache.contains(e.image_path)) cache.emplace(e.image_path, read_png(e.image_path));
    }

    std::vector<EpisodeResult> results(manifest.entries.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= manifest.entries.size()) return;
            try {
                const ManifestEntry& e = manifest.entries[i];
                Episode ep(cache.at(e.image_path),
                           EpisodeParams{e.m, DifficultyLevel{e.level}, e.seed, opts.env, e.image_path});
                auto agent = make_agent(opts.agent, ep, derive_seed(opts.agent_seed, i), opts.greedy);
                run_episode(ep, *agent);
                const Trajectory& t = ep.trajectory();
                results[i] = EpisodeResult{i, e.m, e.level, t.reward ? t.reward->r_acc : 0,
                                           t.metadata.score, t.reward ? t.reward->step_num : 0};
                if (opts.on_trajectory) opts.on_trajectory(i, t);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(manifest.entries.size());
                return;
            }
        }
    };
    const int jobs = std::max(1, opts.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < jobs; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return results;
}

std::vector<EvalRecord> aggregate(const std::vector<EpisodeResult>& results) {
    struct Sums {
        std::size_t n = 0;
        double acc = 0.0, score = 0.0, steps = 0.0;
    };
    // Summing in manifest order keeps the floating-point result independent
    // of how episodes were scheduled.
    std::map<std::pair<int, int>, Sums> groups;
    for (const EpisodeResult& r : results) {
        Sums& s = groups[{r.m, r.level}];
        ++s.n;
        s.acc += r.acc;
        s.score += r.score;
        s.steps += r.step_num;
    }
    std::vector<EvalRecord> out;
    for (const auto& [key, s] : groups) {
        const double n = static_cast<double>(s.n);
        EvalRecord rec{key.first, key.second, s.n, s.acc / n, s.score / n, s.steps / n, 0.0};
        rec.ci95_acc = 1.96 * std::sqrt(rec.acc * (1.0 - rec.acc) / n);
        out.push_back(rec);
    }
    return out;
}

std::vector<EvalRecord> evaluate(const DatasetManifest& manifest, const EvalOptions& opts) {
    if (manifest.entries.empty()) throw Error(ErrorCode::kEmptyCorpus, "manifest has no entries");
    return aggregate(run_manifest(manifest, opts));
}

AvgRow level_average(const std::vector<EvalRecord>& records, int m) {
    AvgRow avg;
    std::size_t count = 0;
    for (const EvalRecord& r : records) {
        if (r.m != m) continue;
        avg.acc += r.acc;
        avg.score += r.score;
        ++count;
    }
    if (count > 0) {
        avg.acc /= static_cast<double>(count);
        avg.score /= static_cast<double>(count);
    }
    return avg;
}

namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string pad_left(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

Report emit_report(const std::vector<EvalRecord>& records, const std::string& row_label) {
    if (records.empty()) throw Error(ErrorCode::kInvalidConfig, "no records to report");
    Report rep;
    rep.csv = "m,level,episodes,acc,score,mean_steps,ci95_acc\n";
    for (const EvalRecord& r : records) {
        rep.csv += std::to_string(r.m) + "," + std::to_string(r.level) + "," +
                   std::to_string(r.episodes) + "," + fixed(r.acc, 6) + "," + fixed(r.score, 6) +
                   "," + fixed(r.mean_steps, 6) + "," + fixed(r.ci95_acc, 6) + "\n";
    }

    std::map<int, std::vector<const EvalRecord*>> by_m;
    for (const EvalRecord& r : records) by_m[r.m].push_back(&r);
    constexpr std::size_t kCol = 7;
    for (const auto& [metric, pick] :
         std::vector<std::pair<std::string, double EvalRecord::*>>{{"Acc (%)", &EvalRecord::acc},
                                                                   {"Score (%)", &EvalRecord::score}}) {
        for (const auto& [m, rows] : by_m) {
            const std::string grid = std::to_string(m) + "x" + std::to_string(m);
            const std::string label = row_label.empty() ? grid : row_label + " " + grid;
            const std::size_t first = std::max<std::size_t>(label.size(), metric.size()) + 2;
            std::string header = pad_right(metric, first);
            std::string line = pad_right(label, first);
            for (const EvalRecord* r : rows) {
                header += pad_left("L" + std::to_string(r->level), kCol);
                line += pad_left(fixed(100.0 * (r->*pick), 1), kCol);
            }
            const AvgRow avg = level_average(records, m);
            header += pad_left("Avg", kCol);
            line += pad_left(fixed(100.0 * (pick == &EvalRecord::acc ? avg.acc : avg.score), 1), kCol);
            rep.text += header + "\n" + line + "\n\n";
        }
    }
    return rep;
}

}  // namespace jigsaw
