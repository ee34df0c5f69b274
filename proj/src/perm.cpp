#include "jigsaw/perm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jigsaw/error.hpp"

namespace jigsaw {

namespace {

int isqrt_exact(std::size_t n) {
    const auto root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    return static_cast<std::size_t>(root) * static_cast<std::size_t>(root) == n ? root : -1;
}

void fisher_yates(std::vector<Label>& values, Rng& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_below(rng, i));
        std::swap(values[i - 1], values[j]);
    }
}

void require_same_size(const Arrangement& a, const Arrangement& b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::kSizeMismatch, "arrangements have different sizes (" +
                                                  std::to_string(a.size()) + " vs " +
                                                  std::to_string(b.size()) + ")");
    }
}

// relative[k] = slot in gt of the label that state places at slot k.
std::vector<std::size_t> relative_permutation(const Arrangement& state, const Arrangement& gt) {
    require_same_size(state, gt);
    const Arrangement gt_inv = gt.inverse();
    std::vector<std::size_t> rel(state.size());
    for (std::size_t k = 0; k < state.size(); ++k) {
        rel[k] = static_cast<std::size_t>(gt_inv[static_cast<std::size_t>(state[k])]);
    }
    return rel;
}

}  // namespace

std::string label_name(Label label) {
    return std::string(1, static_cast<char>('A' + label));
}

Label parse_label_name(std::string_view text) noexcept {
    constexpr char kLast = 'A' + kMaxGridOrder * kMaxGridOrder - 1;
    if (text.size() != 1 || text[0] < 'A' || text[0] > kLast) return -1;
    return text[0] - 'A';
}

bool is_valid_arrangement(const std::vector<Label>& slots) {
    const int m = isqrt_exact(slots.size());
    if (m < 2 || m > kMaxGridOrder) return false;
    std::vector<bool> seen(slots.size(), false);
    for (Label label : slots) {
        if (label < 0 || static_cast<std::size_t>(label) >= slots.size() || seen[label]) {
            return false;
        }
        seen[label] = true;
    }
    return true;
}

Arrangement::Arrangement(std::vector<Label> slots) : slots_(std::move(slots)) {
    if (!is_valid_arrangement(slots_)) {
        throw Error(ErrorCode::kInvalidSize,
                    "not a valid arrangement of " + std::to_string(slots_.size()) + " slots");
    }
}

Arrangement Arrangement::identity(std::size_t n) {
    std::vector<Label> slots(n);
    std::iota(slots.begin(), slots.end(), 0);
    return Arrangement(std::move(slots));
}

int Arrangement::grid_order() const noexcept { return isqrt_exact(slots_.size()); }

std::size_t Arrangement::slot_of(Label label) const {
    const auto it = std::find(slots_.begin(), slots_.end(), label);
    if (it == slots_.end()) {
        throw Error(ErrorCode::kIndexOutOfRange, "label " + std::to_string(label) + " not present");
    }
    return static_cast<std::size_t>(it - slots_.begin());
}

Arrangement Arrangement::inverse() const {
    std::vector<Label> inv(slots_.size());
    for (std::size_t k = 0; k < slots_.size(); ++k) inv[slots_[k]] = static_cast<Label>(k);
    return Arrangement(std::move(inv));
}

std::vector<std::string> Arrangement::label_names() const {
    std::vector<std::string> names;
    names.reserve(slots_.size());
    for (Label label : slots_) names.push_back(label_name(label));
    return names;
}

std::string Arrangement::to_literal() const {
    std::string out = "[";
    for (std::size_t k = 0; k < slots_.size(); ++k) {
        if (k > 0) out += ", ";
        out += '"';
        out += label_name(slots_[k]);
        out += '"';
    }
    out += ']';
    return out;
}

void validate_level(std::size_t n, DifficultyLevel level) {
    if (level.n_correct < 0 || static_cast<std::size_t>(level.n_correct) > n) {
        throw Error(ErrorCode::kInvalidLevel, "level L" + std::to_string(level.n_correct) +
                                                  " out of range for " + std::to_string(n) +
                                                  " tiles");
    }
    if (static_cast<std::size_t>(level.n_correct) + 1 == n) {
        throw Error(ErrorCode::kInvalidLevel,
                    "level L" + std::to_string(level.n_correct) +
                        " is impossible: no permutation has exactly n-1 fixed points");
    }
}

std::vector<Label> sample_derangement(std::size_t k, Rng& rng) {
    if (k < 2) {
        throw Error(ErrorCode::kInvalidSize,
                    "no derangement of " + std::to_string(k) + " element(s)");
    }
    std::vector<Label> perm(k);
    for (;;) {
        std::iota(perm.begin(), perm.end(), 0);
        fisher_yates(perm, rng);
        bool has_fixed = false;
        for (std::size_t i = 0; i < k && !has_fixed; ++i) has_fixed = perm[i] == static_cast<Label>(i);
        if (!has_fixed) return perm;
    }
}

Arrangement sample_with_fixed_points(std::size_t n, int n_correct, Rng& rng) {
    validate_level(n, DifficultyLevel{n_correct});
    std::vector<Label> order(n);
    std::iota(order.begin(), order.end(), 0);
    // Partial Fisher-Yates: the first n_correct entries form a uniform subset.
    for (std::size_t i = 0; i < static_cast<std::size_t>(n_correct); ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_below(rng, n - i));
        std::swap(order[i], order[j]);
    }
    std::vector<Label> displaced(order.begin() + n_correct, order.end());
    std::sort(displaced.begin(), displaced.end());

    std::vector<Label> slots(n);
    std::iota(slots.begin(), slots.end(), 0);
    if (displaced.size() >= 2) {
        const std::vector<Label> d = sample_derangement(displaced.size(), rng);
        for (std::size_t i = 0; i < displaced.size(); ++i) {
            slots[displaced[i]] = displaced[d[i]];
        }
    }
    return Arrangement(std::move(slots));
}

Arrangement sample_uniform(std::size_t n, Rng& rng) {
    std::vector<Label> slots(n);
    std::iota(slots.begin(), slots.end(), 0);
    fisher_yates(slots, rng);
    return Arrangement(std::move(slots));
}

std::size_t count_fixed_points(const Arrangement& state, const Arrangement& gt) {
    require_same_size(state, gt);
    std::size_t count = 0;
    for (std::size_t k = 0; k < state.size(); ++k) count += state[k] == gt[k] ? 1 : 0;
    return count;
}

std::size_t cycle_count(const Arrangement& state, const Arrangement& gt) {
    const auto rel = relative_permutation(state, gt);
    std::vector<bool> visited(rel.size(), false);
    std::size_t cycles = 0;
    for (std::size_t start = 0; start < rel.size(); ++start) {
        if (visited[start]) continue;
        ++cycles;
        for (std::size_t k = start; !visited[k]; k = rel[k]) visited[k] = true;
    }
    return cycles;
}

std::size_t min_swap_distance(const Arrangement& state, const Arrangement& gt) {
    return state.size() - cycle_count(state, gt);
}

Arrangement apply_swap(const Arrangement& state, std::size_t i, std::size_t j) {
    if (i >= state.size() || j >= state.size()) {
        throw Error(ErrorCode::kIndexOutOfRange,
                    "swap (" + std::to_string(i) + ", " + std::to_string(j) +
                        ") outside 0.." + std::to_string(state.size() - 1));
    }
    std::vector<Label> slots = state.slots();
    std::swap(slots[i], slots[j]);
    return Arrangement(std::move(slots));
}

std::vector<std::pair<std::size_t, std::size_t>> swap_plan(const Arrangement& state,
                                                           const Arrangement& gt) {
    require_same_size(state, gt);
    std::vector<Label> current = state.slots();
    std::vector<std::pair<std::size_t, std::size_t>> plan;
    for (std::size_t k = 0; k < current.size(); ++k) {
        // Bring the label that belongs at k into k; each swap fixes one slot and
        // the last swap of a cycle fixes two, giving length - 1 swaps per cycle.
        while (current[k] != gt[k]) {
            const auto from = static_cast<std::size_t>(
                std::find(current.begin(), current.end(), gt[k]) - current.begin());
            plan.emplace_back(k, from);
            std::swap(current[k], current[from]);
        }
    }
    return plan;
}

}  // namespace jigsaw
