#include "peerloop/common/error.hpp"

namespace peerloop {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::kInvalidArgument: return "InvalidArgument";
        case ErrorCode::kEmptyBody: return "EmptyBody";
        case ErrorCode::kPayloadTooLarge: return "PayloadTooLarge";
        case ErrorCode::kIllegalState: return "IllegalState";
        case ErrorCode::kIllegalTransition: return "IllegalTransition";
        case ErrorCode::kAlreadyAssigned: return "AlreadyAssigned";
        case ErrorCode::kNotFound: return "NotFound";
        case ErrorCode::kTimeout: return "Timeout";
        case ErrorCode::kRateLimited: return "RateLimited";
        case ErrorCode::kBackendError: return "BackendError";
        case ErrorCode::kSchemaViolation: return "SchemaViolation";
        case ErrorCode::kUnknownSchema: return "UnknownSchema";
        case ErrorCode::kSearchUnavailable: return "SearchUnavailable";
        case ErrorCode::kTooFewReviews: return "TooFewReviews";
        case ErrorCode::kWrongPanelSize: return "WrongPanelSize";
        case ErrorCode::kDuplicateModel: return "DuplicateModel";
        case ErrorCode::kMalformedPdf: return "MalformedPdf";
        case ErrorCode::kEncryptedPdf: return "EncryptedPdf";
        case ErrorCode::kUnsupportedPdfStructure: return "UnsupportedPdfStructure";
        case ErrorCode::kConfig: return "Config";
        case ErrorCode::kIo: return "Io";
    }
    return "Unknown";
}

}  // namespace peerloop
