#include "jigsaw/error.hpp"

namespace jigsaw {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::kInvalidLevel: return "InvalidLevel";
        case ErrorCode::kInvalidSize: return "InvalidSize";
        case ErrorCode::kSizeMismatch: return "SizeMismatch";
        case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::kEmptyImage: return "EmptyImage";
        case ErrorCode::kNotDivisible: return "NotDivisible";
        case ErrorCode::kInvalidBox: return "InvalidBox";
        case ErrorCode::kDegenerateBox: return "DegenerateBox";
        case ErrorCode::kNonPositiveFactor: return "NonPositiveFactor";
        case ErrorCode::kImageTooLarge: return "ImageTooLarge";
        case ErrorCode::kEdgeLengthMismatch: return "EdgeLengthMismatch";
        case ErrorCode::kSyntax: return "SyntaxError";
        case ErrorCode::kNameConstraint: return "NameConstraintError";
        case ErrorCode::kMirror: return "MirrorError";
        case ErrorCode::kMultipleImageOps: return "MultipleImageOps";
        case ErrorCode::kMalformedAnswer: return "MalformedAnswer";
        case ErrorCode::kWrongLength: return "WrongLength";
        case ErrorCode::kDuplicateLabel: return "DuplicateLabel";
        case ErrorCode::kUnknownImageRef: return "UnknownImageRef";
        case ErrorCode::kSwapIndexOutOfRange: return "SwapIndexOutOfRange";
        case ErrorCode::kEpisodeFinished: return "EpisodeFinished";
        case ErrorCode::kBusy: return "Busy";
        case ErrorCode::kStepOverflow: return "StepOverflow";
        case ErrorCode::kEmptyMask: return "EmptyMask";
        case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
        case ErrorCode::kUndecodableImage: return "UndecodableImage";
        case ErrorCode::kSchema: return "SchemaError";
        case ErrorCode::kReplayDivergence: return "ReplayDivergence";
        case ErrorCode::kInvalidConfig: return "InvalidConfig";
        case ErrorCode::kUnknownAgent: return "UnknownAgent";
        case ErrorCode::kUnknownEpisode: return "UnknownEpisode";
        case ErrorCode::kBind: return "BindError";
        case ErrorCode::kIo: return "IoError";
    }
    return "Unknown";
}

}  // namespace jigsaw
