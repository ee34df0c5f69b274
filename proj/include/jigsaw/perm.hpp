#pragma once

#include <compare>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "jigsaw/rng.hpp"

namespace jigsaw {

// Tile labels are indices into the label alphabet: 0 -> "A", 1 -> "B", ...
using Label = int;

inline constexpr int kMaxGridOrder = 5;  // 25 tiles, labels A..Y

std::string label_name(Label label);
// Returns -1 when the text is not a single uppercase letter.
Label parse_label_name(std::string_view text) noexcept;

// Assignment of tile labels to grid slots in row-major order. Always a
// bijection over {0, ..., n-1} with n = m * m, m >= 2.
class Arrangement {
public:
    explicit Arrangement(std::vector<Label> slots);

    static Arrangement identity(std::size_t n);

    [[nodiscard]] std::size_t size() const noexcept { return slots_.size(); }
    [[nodiscard]] int grid_order() const noexcept;
    [[nodiscard]] Label operator[](std::size_t slot) const { return slots_[slot]; }
    [[nodiscard]] const std::vector<Label>& slots() const noexcept { return slots_; }

    // Slot currently holding the given label.
    [[nodiscard]] std::size_t slot_of(Label label) const;
    [[nodiscard]] Arrangement inverse() const;
    [[nodiscard]] std::vector<std::string> label_names() const;
    // Renders as ["A", "B", ...], the form accepted in answer blocks.
    [[nodiscard]] std::string to_literal() const;

    auto operator<=>(const Arrangement&) const = default;

private:
    std::vector<Label> slots_;
};

// True when `slots` is a permutation of 0..n-1 and n is a square >= 4.
bool is_valid_arrangement(const std::vector<Label>& slots);

// Initial number of correctly placed tiles, i.e. the N of level LN.
struct DifficultyLevel {
    int n_correct = 0;
};

void validate_level(std::size_t n, DifficultyLevel level);

std::vector<Label> sample_derangement(std::size_t k, Rng& rng);

// Exactly `n_correct` slots agree with the identity; the fixed set is uniform
// over all C(n, n_correct) subsets and the rest is a uniform derangement.
Arrangement sample_with_fixed_points(std::size_t n, int n_correct, Rng& rng);

Arrangement sample_uniform(std::size_t n, Rng& rng);

std::size_t count_fixed_points(const Arrangement& state, const Arrangement& gt);

std::size_t cycle_count(const Arrangement& state, const Arrangement& gt);

// n minus the number of cycles of the permutation carrying state onto gt.
std::size_t min_swap_distance(const Arrangement& state, const Arrangement& gt);

Arrangement apply_swap(const Arrangement& state, std::size_t i, std::size_t j);

// A minimum-length sequence of slot transpositions turning state into gt,
// produced cycle by cycle starting from the lowest misplaced slot.
std::vector<std::pair<std::size_t, std::size_t>> swap_plan(const Arrangement& state,
                                                           const Arrangement& gt);

}  // namespace jigsaw
