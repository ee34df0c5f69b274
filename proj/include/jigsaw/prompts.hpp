#pragma once

#include <string>
#include <string_view>

namespace jigsaw {

// Human-readable name of a grid slot, e.g. "Top left" on 2x2 and 3x3 grids.
std::string slot_position_name(int m, int slot);

std::string system_prompt(int m);
std::string user_prompt(int m);

// Replaces each {key} in `tmpl` using `lookup`; unknown keys are left as is.
template <typename Lookup>
std::string fill_template(std::string_view tmpl, Lookup&& lookup) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const std::size_t open = tmpl.find('{', pos);
        if (open == std::string_view::npos) break;
        const std::size_t close = tmpl.find('}', open);
        if (close == std::string_view::npos) break;
        out.append(tmpl.substr(pos, open - pos));
        const std::string_view key = tmpl.substr(open + 1, close - open - 1);
        if (auto value = lookup(key)) {
            out += *value;
        } else {
            out.append(tmpl.substr(open, close - open + 1));
        }
        pos = close + 1;
    }
    out.append(tmpl.substr(pos));
    return out;
}

}  // namespace jigsaw
