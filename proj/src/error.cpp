#include "qcia/error.hpp"

namespace qcia {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::FileNotFound: return "FileNotFound";
        case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
        case ErrorCode::CorruptStream: return "CorruptStream";
        case ErrorCode::ChannelMismatch: return "ChannelMismatch";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::QualityOutOfRange: return "QualityOutOfRange";
        case ErrorCode::ZeroDimension: return "ZeroDimension";
        case ErrorCode::InvalidClass: return "InvalidClass";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
        case ErrorCode::TooManyParameters: return "TooManyParameters";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
        case ErrorCode::ImageTooSmall: return "ImageTooSmall";
        case ErrorCode::UntrainedModel: return "UntrainedModel";
        case ErrorCode::InvalidK: return "InvalidK";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::BadWeights: return "BadWeights";
        case ErrorCode::MissingAnalyzer: return "MissingAnalyzer";
        case ErrorCode::MissingGroundTruth: return "MissingGroundTruth";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::EmptyTestSet: return "EmptyTestSet";
        case ErrorCode::IncompleteInputs: return "IncompleteInputs";
        case ErrorCode::ValidationErrors: return "ValidationErrors";
    }
    return "UnknownError";
}

}  // namespace qcia
