#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace jigsaw {

enum class ErrorCode {
    kInvalidLevel,
    kInvalidSize,
    kSizeMismatch,
    kIndexOutOfRange,
    kEmptyImage,
    kNotDivisible,
    kInvalidBox,
    kDegenerateBox,
    kNonPositiveFactor,
    kImageTooLarge,
    kEdgeLengthMismatch,
    kSyntax,
    kNameConstraint,
    kMirror,
    kMultipleImageOps,
    kMalformedAnswer,
    kWrongLength,
    kDuplicateLabel,
    kUnknownImageRef,
    kSwapIndexOutOfRange,
    kEpisodeFinished,
    kBusy,
    kStepOverflow,
    kEmptyMask,
    kEmptyCorpus,
    kUndecodableImage,
    kSchema,
    kReplayDivergence,
    kInvalidConfig,
    kUnknownAgent,
    kUnknownEpisode,
    kBind,
    kIo,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Raised by the action-language parser; line and column are 1-based.
class ParseError : public Error {
public:
    ParseError(ErrorCode code, const std::string& message, int line, int column)
        : Error(code, message), line_(line), column_(column) {}

    [[nodiscard]] int line() const noexcept { return line_; }
    [[nodiscard]] int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

}  // namespace jigsaw
