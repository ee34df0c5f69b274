#include "jigsaw/action.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <set>

#include "jigsaw/error.hpp"

namespace jigsaw {

// ─── Tagged responses ──────────────────────────────────────────

namespace {

enum class Tag { kThink, kCode, kAnswer };

struct TagSpelling {
    Tag tag;
    std::string_view open;
    std::string_view close;
    std::string_view name;
};

constexpr std::array<TagSpelling, 3> kTags{{
    {Tag::kThink, "<think>", "</think>", "think"},
    {Tag::kCode, "<code>", "</code>", "code"},
    {Tag::kAnswer, "<answer>", "</answer>", "answer"},
}};

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char ch) { return std::isspace(ch) != 0; });
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string snippet(std::string_view s) {
    s = trim(s);
    std::string out(s.substr(0, 24));
    if (s.size() > 24) out += "...";
    return out;
}

}  // namespace

std::optional<std::string> TaggedResponse::answer() const {
    if (answer_blocks.empty()) return std::nullopt;
    return answer_blocks.back();
}

TaggedResponse extract_tags(std::string_view text) {
    TaggedResponse out;
    const TagSpelling* open = nullptr;
    std::string content;
    std::string untagged;

    const auto flush_untagged = [&] {
        if (!is_blank(untagged)) {
            out.violations.push_back("text outside tags: \"" + snippet(untagged) + "\"");
        }
        untagged.clear();
    };
    const auto push_block = [&](Tag tag, std::string body) {
        switch (tag) {
            case Tag::kThink: out.think_blocks.push_back(std::move(body)); break;
            case Tag::kCode: out.code_blocks.push_back(std::move(body)); break;
            case Tag::kAnswer: out.answer_blocks.push_back(std::move(body)); break;
        }
    };

    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::string_view rest = text.substr(pos);
        bool matched = false;
        if (rest.front() == '<') {
            for (const auto& spelling : kTags) {
                if (rest.starts_with(spelling.open)) {
                    matched = true;
                    if (open) {
                        out.violations.push_back("<" + std::string(spelling.name) +
                                                 "> nested inside <" + std::string(open->name) +
                                                 ">");
                        content += spelling.open;
                    } else {
                        flush_untagged();
                        open = &spelling;
                    }
                    pos += spelling.open.size();
                    break;
                }
                if (rest.starts_with(spelling.close)) {
                    matched = true;
                    if (open && open->tag == spelling.tag) {
                        push_block(spelling.tag, std::move(content));
                        content.clear();
                        open = nullptr;
                    } else if (open) {
                        out.violations.push_back("</" + std::string(spelling.name) +
                                                 "> does not close <" + std::string(open->name) +
                                                 ">");
                        content += spelling.close;
                    } else {
                        flush_untagged();
                        out.violations.push_back("</" + std::string(spelling.name) +
                                                 "> without matching opening tag");
                    }
                    pos += spelling.close.size();
                    break;
                }
            }
        }
        if (!matched) {
            (open ? content : untagged) += text[pos];
            ++pos;
        }
    }
    if (open) {
        out.violations.push_back("<" + std::string(open->name) + "> is never closed");
        push_block(open->tag, std::move(content));
    }
    flush_untagged();
    if (out.answer_blocks.size() > 1) {
        out.violations.push_back(std::to_string(out.answer_blocks.size()) + " answer blocks");
    }
    out.format_ok = out.violations.empty();
    return out;
}

// ─── Lexer ─────────────────────────────────────────────────────

namespace {

enum class Tok { kIdent, kNumber, kLBracket, kRBracket, kLParen, kRParen, kComma, kAssign, kEnd };

struct Token {
    Tok kind = Tok::kEnd;
    std::string text;
    int line = 0;
    int column = 0;
};

std::string describe(const Token& t) {
    switch (t.kind) {
        case Tok::kEnd: return "end of line";
        case Tok::kIdent:
        case Tok::kNumber: return "'" + t.text + "'";
        default: return "'" + t.text + "'";
    }
}

std::vector<Token> lex_line(std::string_view line, int line_no) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    const auto col = [&](std::size_t at) { return static_cast<int>(at) + 1; };
    while (i < line.size()) {
        const char ch = line[i];
        if (ch == '#') break;
        if (std::isspace(static_cast<unsigned char>(ch))) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
            while (i < line.size() &&
                   (std::isalnum(static_cast<unsigned char>(line[i])) || line[i] == '_')) {
                ++i;
            }
            tokens.push_back({Tok::kIdent, std::string(line.substr(start, i - start)), line_no,
                              col(start)});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' || ch == '+') {
            if (ch == '-' || ch == '+') ++i;
            while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
            if (i < line.size() && line[i] == '.') {
                ++i;
                while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
            }
            if (i < line.size() && (line[i] == 'e' || line[i] == 'E')) {
                std::size_t j = i + 1;
                if (j < line.size() && (line[j] == '-' || line[j] == '+')) ++j;
                if (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) {
                    i = j;
                    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) {
                        ++i;
                    }
                }
            }
            const std::string text(line.substr(start, i - start));
            if (std::none_of(text.begin(), text.end(),
                             [](unsigned char c) { return std::isdigit(c) != 0; })) {
                throw ParseError(ErrorCode::kSyntax,
                                 "line " + std::to_string(line_no) + ", column " +
                                     std::to_string(col(start)) + ": malformed number '" + text +
                                     "'",
                                 line_no, col(start));
            }
            tokens.push_back({Tok::kNumber, text, line_no, col(start)});
            continue;
        }
        Tok kind;
        switch (ch) {
            case '[': kind = Tok::kLBracket; break;
            case ']': kind = Tok::kRBracket; break;
            case '(': kind = Tok::kLParen; break;
            case ')': kind = Tok::kRParen; break;
            case ',': kind = Tok::kComma; break;
            case '=': kind = Tok::kAssign; break;
            default:
                throw ParseError(ErrorCode::kSyntax,
                                 "line " + std::to_string(line_no) + ", column " +
                                     std::to_string(col(start)) + ": unexpected character '" +
                                     std::string(1, ch) + "'",
                                 line_no, col(start));
        }
        tokens.push_back({kind, std::string(1, ch), line_no, col(start)});
        ++i;
    }
    tokens.push_back({Tok::kEnd, "", line_no, col(line.size())});
    return tokens;
}

// ─── Parser ────────────────────────────────────────────────────

bool is_result_id(std::string_view s) {
    return result_kind(s).has_value();
}

class LineParser {
public:
    LineParser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    Statement statement() {
        const Token& first = peek();
        if (first.kind == Tok::kIdent && first.text == "state" && peek(1).kind == Tok::kLBracket) {
            return swap();
        }
        const Token target = expect(Tok::kIdent, "an identifier or 'state['");
        expect(Tok::kAssign, "'='");
        if (peek().kind == Tok::kLBracket) return box_assign(target);
        const Token callee = expect(Tok::kIdent, "'crop', 'zoom', 'observation' or a box literal");
        if (callee.text == "crop") return crop(target);
        if (callee.text == "zoom") return zoom(target);
        if (callee.text == "observation") return observe(target);
        fail(ErrorCode::kSyntax, callee,
             "unsupported call '" + callee.text + "'; expected crop, zoom or observation");
    }

    void finish() { expect(Tok::kEnd, "end of statement"); }

private:
    const Token& peek(std::size_t ahead = 0) const {
        return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
    }

    Token next() {
        Token t = peek();
        if (pos_ < tokens_.size() - 1) ++pos_;
        return t;
    }

    [[noreturn]] static void fail(ErrorCode code, const Token& at, const std::string& message) {
        throw ParseError(code,
                         "line " + std::to_string(at.line) + ", column " +
                             std::to_string(at.column) + ": " + message,
                         at.line, at.column);
    }

    Token expect(Tok kind, const std::string& what) {
        if (peek().kind != kind) {
            fail(ErrorCode::kSyntax, peek(), "expected " + what + ", found " + describe(peek()));
        }
        return next();
    }

    void expect_word(std::string_view word) {
        const Token& t = peek();
        if (t.kind != Tok::kIdent || t.text != word) {
            fail(ErrorCode::kSyntax, t,
                 "expected '" + std::string(word) + "', found " + describe(t));
        }
        next();
    }

    int slot_index() {
        expect_word("state");
        expect(Tok::kLBracket, "'['");
        const Token t = expect(Tok::kNumber, "a slot index");
        int value = 0;
        const auto* end = t.text.data() + t.text.size();
        const auto [ptr, ec] = std::from_chars(t.text.data(), end, value);
        if (ec != std::errc{} || ptr != end || value < 0) {
            fail(ErrorCode::kSyntax, t, "slot index must be a non-negative integer");
        }
        expect(Tok::kRBracket, "']'");
        return value;
    }

    double number() {
        const Token t = expect(Tok::kNumber, "a number");
        std::string_view text = t.text;
        if (!text.empty() && text.front() == '+') text.remove_prefix(1);
        double value = 0.0;
        const auto* end = text.data() + text.size();
        const auto [ptr, ec] = std::from_chars(text.data(), end, value);
        if (ec != std::errc{} || ptr != end) fail(ErrorCode::kSyntax, t, "malformed number");
        return value;
    }

    NormalizedBox list4() {
        const Token open = expect(Tok::kLBracket, "'['");
        std::array<double, 4> v{};
        for (std::size_t k = 0; k < 4; ++k) {
            if (k > 0) expect(Tok::kComma, "','");
            v[k] = number();
        }
        expect(Tok::kRBracket, "']' after four coordinates");
        const NormalizedBox box{v[0], v[1], v[2], v[3]};
        if (!is_valid_box(box)) {
            fail(ErrorCode::kInvalidBox, open,
                 "box must satisfy 0 <= x1 < x2 <= 1 and 0 <= y1 < y2 <= 1");
        }
        return box;
    }

    ImageRef image_ref() {
        const Token t = expect(Tok::kIdent, "an image identifier");
        if (!is_result_id(t.text) && parse_label_name(t.text) < 0) {
            fail(ErrorCode::kSyntax, t,
                 "'" + t.text + "' is not an image identifier or tile label");
        }
        return ImageRef{t.text};
    }

    void check_result(const Token& target, ImageKind kind) {
        const auto actual = result_kind(target.text);
        if (!actual || *actual != kind) {
            fail(ErrorCode::kNameConstraint, target,
                 "result of " + std::string(kind_prefix(kind)) + "() must be named " +
                     std::string(kind_prefix(kind)) + "_image_<id>, got '" + target.text + "'");
        }
    }

    Statement swap() {
        const Token& at = peek();
        const int a = slot_index();
        expect(Tok::kComma, "','");
        const int b = slot_index();
        expect(Tok::kAssign, "'='");
        const int c = slot_index();
        expect(Tok::kComma, "','");
        const int d = slot_index();
        if (c != b || d != a) {
            fail(ErrorCode::kMirror, at,
                 "swap must read state[i], state[j] = state[j], state[i]");
        }
        return SwapStmt{a, b};
    }

    Statement box_assign(const Token& target) {
        if (target.text == "state" || is_result_id(target.text) ||
            parse_label_name(target.text) >= 0) {
            fail(ErrorCode::kNameConstraint, target,
                 "'" + target.text + "' is reserved and cannot hold a crop box");
        }
        return BoxAssignStmt{target.text, list4()};
    }

    Statement crop(const Token& target) {
        check_result(target, ImageKind::kCrop);
        expect(Tok::kLParen, "'('");
        CropStmt stmt{target.text, image_ref(), {}};
        expect(Tok::kComma, "','");
        if (peek().kind == Tok::kLBracket) {
            stmt.box = list4();
        } else {
            const Token name = expect(Tok::kIdent, "a crop box name or [x1, y1, x2, y2]");
            if (name.text == "state" || is_result_id(name.text)) {
                fail(ErrorCode::kSyntax, name, "'" + name.text + "' is not a crop box");
            }
            stmt.box = name.text;
        }
        expect(Tok::kRParen, "')'");
        return stmt;
    }

    Statement zoom(const Token& target) {
        check_result(target, ImageKind::kZoom);
        expect(Tok::kLParen, "'('");
        ZoomStmt stmt{target.text, image_ref(), 1.0};
        expect(Tok::kComma, "','");
        stmt.factor = number();
        expect(Tok::kRParen, "')'");
        return stmt;
    }

    Statement observe(const Token& target) {
        check_result(target, ImageKind::kObservation);
        expect(Tok::kLParen, "'('");
        expect_word("state");
        expect(Tok::kRParen, "')'");
        return ObserveStmt{target.text};
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

bool is_image_op(const Statement& s) {
    return std::holds_alternative<CropStmt>(s) || std::holds_alternative<ZoomStmt>(s) ||
           std::holds_alternative<ObserveStmt>(s);
}

}  // namespace

std::optional<ImageKind> result_kind(std::string_view identifier) {
    static constexpr std::array<std::pair<std::string_view, ImageKind>, 3> kPrefixes{{
        {"observation_image_", ImageKind::kObservation},
        {"crop_image_", ImageKind::kCrop},
        {"zoom_image_", ImageKind::kZoom},
    }};
    for (const auto& [prefix, kind] : kPrefixes) {
        if (!identifier.starts_with(prefix)) continue;
        const std::string_view digits = identifier.substr(prefix.size());
        if (digits.empty() || digits.size() > 9) return std::nullopt;
        if (!std::all_of(digits.begin(), digits.end(),
                         [](unsigned char c) { return std::isdigit(c) != 0; })) {
            return std::nullopt;
        }
        if (digits.size() > 1 && digits.front() == '0') return std::nullopt;
        return kind;
    }
    return std::nullopt;
}

std::string_view kind_prefix(ImageKind kind) {
    switch (kind) {
        case ImageKind::kObservation: return "observation";
        case ImageKind::kCrop: return "crop";
        case ImageKind::kZoom: return "zoom";
    }
    return "";
}

int ActionProgram::image_op_count() const noexcept {
    return static_cast<int>(std::count_if(statements.begin(), statements.end(), is_image_op));
}

ActionProgram parse_program(std::string_view code) {
    ActionProgram program;
    int line_no = 0;
    int first_image_line = 0;
    std::size_t start = 0;
    while (start <= code.size()) {
        std::size_t end = code.find('\n', start);
        if (end == std::string_view::npos) end = code.size();
        const std::string_view line = code.substr(start, end - start);
        ++line_no;
        auto tokens = lex_line(line, line_no);
        if (tokens.size() > 1) {
            LineParser parser(std::move(tokens));
            program.statements.push_back(parser.statement());
            parser.finish();
            const Statement& stmt = program.statements.back();
            if (is_image_op(stmt)) {
                if (first_image_line != 0) {
                    throw ParseError(ErrorCode::kMultipleImageOps,
                                     "line " + std::to_string(line_no) +
                                         ": only one crop, zoom or observation is allowed per "
                                         "turn (first one on line " +
                                         std::to_string(first_image_line) + ")",
                                     line_no, 1);
                }
                first_image_line = line_no;
            }
        }
        start = end + 1;
    }
    return program;
}

std::string format_number(double value) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

namespace {

std::string render_box(const NormalizedBox& b) {
    return "[" + format_number(b.x1) + ", " + format_number(b.y1) + ", " + format_number(b.x2) +
           ", " + format_number(b.y2) + "]";
}

}  // namespace

std::string render_statement(const Statement& stmt) {
    struct Visitor {
        std::string operator()(const SwapStmt& s) const {
            const std::string i = std::to_string(s.i);
            const std::string j = std::to_string(s.j);
            return "state[" + i + "], state[" + j + "] = state[" + j + "], state[" + i + "]";
        }
        std::string operator()(const BoxAssignStmt& s) const {
            return s.name + " = " + render_box(s.box);
        }
        std::string operator()(const CropStmt& s) const {
            const std::string box = std::holds_alternative<std::string>(s.box)
                                        ? std::get<std::string>(s.box)
                                        : render_box(std::get<NormalizedBox>(s.box));
            return s.result + " = crop(" + s.source.name + ", " + box + ")";
        }
        std::string operator()(const ZoomStmt& s) const {
            return s.result + " = zoom(" + s.source.name + ", " + format_number(s.factor) + ")";
        }
        std::string operator()(const ObserveStmt& s) const {
            return s.result + " = observation(state)";
        }
    };
    return std::visit(Visitor{}, stmt);
}

std::string render_program(const ActionProgram& program) {
    std::string out;
    for (std::size_t k = 0; k < program.statements.size(); ++k) {
        if (k > 0) out += '\n';
        out += render_statement(program.statements[k]);
    }
    return out;
}

// ─── Answers ───────────────────────────────────────────────────

Arrangement parse_answer(std::string_view answer, std::size_t n) {
    const auto malformed = [](const std::string& why) {
        return Error(ErrorCode::kMalformedAnswer, "malformed answer: " + why);
    };
    std::string_view s = trim(answer);
    if (s.starts_with("state")) {
        s.remove_prefix(5);
        s = trim(s);
        if (s.empty() || s.front() != '=') throw malformed("expected '=' after 'state'");
        s.remove_prefix(1);
        s = trim(s);
    }
    if (s.empty() || s.front() != '[') throw malformed("expected '['");
    if (s.back() != ']') throw malformed("expected ']' at the end");
    s = s.substr(1, s.size() - 2);

    std::vector<Label> labels;
    std::size_t i = 0;
    const auto skip_ws = [&] {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    };
    skip_ws();
    while (i < s.size()) {
        const char quote = s[i];
        if (quote != '"' && quote != '\'') throw malformed("labels must be quoted");
        const std::size_t close = s.find(quote, i + 1);
        if (close == std::string_view::npos) throw malformed("unterminated label");
        const std::string_view name = s.substr(i + 1, close - i - 1);
        const Label label = parse_label_name(name);
        if (label < 0 || static_cast<std::size_t>(label) >= n) {
            throw malformed("unknown label '" + std::string(name) + "'");
        }
        labels.push_back(label);
        i = close + 1;
        skip_ws();
        if (i < s.size()) {
            if (s[i] != ',') throw malformed("expected ',' between labels");
            ++i;
            skip_ws();
        }
    }
    std::set<Label> seen;
    for (Label label : labels) {
        if (!seen.insert(label).second) {
            throw Error(ErrorCode::kDuplicateLabel,
                        "duplicate label '" + label_name(label) + "' in answer");
        }
    }
    if (labels.size() != n) {
        throw Error(ErrorCode::kWrongLength, "answer has " + std::to_string(labels.size()) +
                                                 " labels, expected " + std::to_string(n));
    }
    return Arrangement(std::move(labels));
}

}  // namespace jigsaw
