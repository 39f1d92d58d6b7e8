#pragma once

#include <stdexcept>
#include <string>

namespace qcia {

enum class ErrorCode {
    FileNotFound,
    UnsupportedFormat,
    CorruptStream,
    ChannelMismatch,
    IoFailure,
    QualityOutOfRange,
    ZeroDimension,
    InvalidClass,
    ShapeMismatch,
    LabelOutOfRange,
    TooManyParameters,
    EmptyDataset,
    VersionMismatch,
    ChecksumMismatch,
    ImageTooSmall,
    UntrainedModel,
    InvalidK,
    DimensionMismatch,
    BadWeights,
    MissingAnalyzer,
    MissingGroundTruth,
    LengthMismatch,
    EmptyTestSet,
    IncompleteInputs,
    ValidationErrors,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace qcia
