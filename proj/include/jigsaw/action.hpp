#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "jigsaw/image.hpp"
#include "jigsaw/perm.hpp"

namespace jigsaw {

// ─── Tagged responses ──────────────────────────────────────────

struct TaggedResponse {
    std::vector<std::string> think_blocks;
    std::vector<std::string> code_blocks;
    std::vector<std::string> answer_blocks;
    std::vector<std::string> violations;
    bool format_ok = false;

    [[nodiscard]] bool has_answer() const noexcept { return !answer_blocks.empty(); }
    [[nodiscard]] bool has_code() const noexcept { return !code_blocks.empty(); }
    // The last answer block, if any.
    [[nodiscard]] std::optional<std::string> answer() const;
};

// Never throws. format_ok holds iff every non-whitespace character sits inside
// exactly one balanced, non-nested <think>/<code>/<answer> pair and there is at
// most one answer block; otherwise `violations` names each problem.
TaggedResponse extract_tags(std::string_view text);

// ─── Action programs ───────────────────────────────────────────

enum class ImageKind { kObservation, kCrop, kZoom };

// "<kind>_image_<n>" identifiers; tile labels are single uppercase letters.
struct ImageRef {
    std::string name;
    bool operator==(const ImageRef&) const = default;
};

std::optional<ImageKind> result_kind(std::string_view identifier);
std::string_view kind_prefix(ImageKind kind);

struct SwapStmt {
    int i = 0;
    int j = 0;
    bool operator==(const SwapStmt&) const = default;
};

struct BoxAssignStmt {
    std::string name;
    NormalizedBox box;
    bool operator==(const BoxAssignStmt&) const = default;
};

struct CropStmt {
    std::string result;
    ImageRef source;
    std::variant<std::string, NormalizedBox> box;  // variable name or inline literal
    bool operator==(const CropStmt&) const = default;
};

struct ZoomStmt {
    std::string result;
    ImageRef source;
    double factor = 1.0;
    bool operator==(const ZoomStmt&) const = default;
};

struct ObserveStmt {
    std::string result;
    bool operator==(const ObserveStmt&) const = default;
};

using Statement = std::variant<SwapStmt, BoxAssignStmt, CropStmt, ZoomStmt, ObserveStmt>;

struct ActionProgram {
    std::vector<Statement> statements;

    [[nodiscard]] int image_op_count() const noexcept;
    bool operator==(const ActionProgram&) const = default;
};

// Throws ParseError (kSyntax, kNameConstraint, kMirror, kInvalidBox,
// kMultipleImageOps). Swap indices are not range checked here.
ActionProgram parse_program(std::string_view code);

std::string render_statement(const Statement& stmt);
std::string render_program(const ActionProgram& program);

// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

// ─── Answers ───────────────────────────────────────────────────

// Parses ["A", "B", ...] (single or double quotes, optional leading
// "state ="). Throws Error with kMalformedAnswer, kWrongLength or
// kDuplicateLabel.
Arrangement parse_answer(std::string_view answer, std::size_t n);

}  // namespace jigsaw
