#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace peerloop {

enum class ErrorCode {
    kInvalidArgument,
    kEmptyBody,
    kPayloadTooLarge,
    kIllegalState,
    kIllegalTransition,
    kAlreadyAssigned,
    kNotFound,
    kTimeout,
    kRateLimited,
    kBackendError,
    kSchemaViolation,
    kUnknownSchema,
    kSearchUnavailable,
    kTooFewReviews,
    kWrongPanelSize,
    kDuplicateModel,
    kMalformedPdf,
    kEncryptedPdf,
    kUnsupportedPdfStructure,
    kConfig,
    kIo,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code. All library failures are
/// reported through this type so callers (HTTP layer, CLI) can map codes to
/// status values without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// True for failures a caller may retry (the gateway's retry loop uses this).
inline bool is_transient(ErrorCode code) {
    return code == ErrorCode::kTimeout || code == ErrorCode::kRateLimited;
}

}  // namespace peerloop
