#include "jigsaw/prompts.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>

#include "jigsaw/perm.hpp"
#include "jigsaw_prompt_assets.hpp"

namespace jigsaw {

namespace {

std::string label_words(int n) {
    std::string out;
    for (int k = 0; k < n; ++k) {
        if (k > 0) out += (k == n - 1) ? (n == 2 ? " and " : ", and ") : ", ";
        out += label_name(k);
    }
    return out;
}

std::string count_word(int n) {
    static constexpr std::array<std::string_view, 26> kWords{
        "zero",        "one",          "two",         "three",       "four",
        "five",        "six",          "seven",       "eight",       "nine",
        "ten",         "eleven",       "twelve",      "thirteen",    "fourteen",
        "fifteen",     "sixteen",      "seventeen",   "eighteen",    "nineteen",
        "twenty",      "twenty-one",   "twenty-two",  "twenty-three", "twenty-four",
        "twenty-five"};
    return n >= 0 && n < static_cast<int>(kWords.size()) ? std::string(kWords[n])
                                                         : std::to_string(n);
}

std::string lower_first(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
    return s;
}

}  // namespace

std::string slot_position_name(int m, int slot) {
    const int r = slot / m;
    const int c = slot % m;
    if (m == 2) {
        static constexpr std::array<std::string_view, 4> kNames{"Top left", "Top right",
                                                                "Bottom left", "Bottom right"};
        return std::string(kNames[slot]);
    }
    if (m == 3) {
        static constexpr std::array<std::string_view, 9> kNames{
            "Top left",    "Top center",    "Top right",    "Middle left", "Center",
            "Middle right", "Bottom left",  "Bottom center", "Bottom right"};
        return std::string(kNames[slot]);
    }
    return "Row " + std::to_string(r + 1) + ", column " + std::to_string(c + 1);
}

std::string system_prompt(int m) {
    const int n = m * m;
    const Arrangement initial = Arrangement::identity(static_cast<std::size_t>(n));

    std::string layout;
    for (int r = 0; r < m; ++r) {
        if (r > 0) layout += '\n';
        for (int c = 0; c < m; ++c) {
            if (c > 0) layout += ' ';
            layout += label_name(r * m + c);
        }
    }

    // Example state: the first three labels rotated left, the rest in place.
    std::vector<Label> example = initial.slots();
    std::rotate(example.begin(), example.begin() + 1, example.begin() + 3);
    const Arrangement example_state(example);
    std::string positions;
    for (int k = 0; k < n; ++k) {
        if (k > 0) positions += '\n';
        positions += slot_position_name(m, k) + " (index " + std::to_string(k) +
                     "): " + label_name(example[static_cast<std::size_t>(k)]);
    }

    const std::string swap_desc =
        lower_first(slot_position_name(m, 0)) + " and " + lower_first(slot_position_name(m, m));

    return fill_template(kSystemPromptTemplate, [&](std::string_view key) -> std::optional<std::string> {
        if (key == "m") return std::to_string(m);
        if (key == "n") return std::to_string(n);
        if (key == "label_words") return label_words(n);
        if (key == "initial_list") return initial.to_literal();
        if (key == "layout") return layout;
        if (key == "example_state") return example_state.to_literal();
        if (key == "example_positions") return positions;
        if (key == "swap_desc") return swap_desc;
        if (key == "swap_a") return std::string("0");
        if (key == "swap_b") return std::to_string(m);
        return std::nullopt;
    });
}

std::string user_prompt(int m) {
    const int n = m * m;
    std::string lines;
    for (int k = 0; k < n; ++k) {
        if (k > 0) lines += '\n';
        lines += "Image " + label_name(k) + ": <image>";
    }
    return fill_template(kUserPromptTemplate, [&](std::string_view key) -> std::optional<std::string> {
        if (key == "count_word") return count_word(n);
        if (key == "label_words") return label_words(n);
        if (key == "image_lines") return lines;
        return std::nullopt;
    });
}

}  // namespace jigsaw
