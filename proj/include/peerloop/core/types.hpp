#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "peerloop/common/clock.hpp"

namespace peerloop::core {

enum class Kind { kProposal, kPaper };

enum class Status {
    kSubmitted,
    kQuarantined,
    kUnderReview,
    kRevisionRequested,
    kResubmitted,
    kProvisionallyAccepted,
    kAccepted,
    kRejected,
};

inline constexpr Status kAllStatuses[] = {
    Status::kSubmitted,   Status::kQuarantined,           Status::kUnderReview, Status::kRevisionRequested,
    Status::kResubmitted, Status::kProvisionallyAccepted, Status::kAccepted,    Status::kRejected,
};

enum class StatusEvent {
    kScanPassed,
    kScanFailed,
    kReviewComplete,
    kRevisionSubmitted,
    kVoteAccept,
    kVoteReject,
    kExternalThresholdMet,
};

inline constexpr StatusEvent kAllStatusEvents[] = {
    StatusEvent::kScanPassed,        StatusEvent::kScanFailed, StatusEvent::kReviewComplete,
    StatusEvent::kRevisionSubmitted, StatusEvent::kVoteAccept, StatusEvent::kVoteReject,
    StatusEvent::kExternalThresholdMet,
};

std::string_view to_string(Kind k);
std::string_view to_string(Status s);
std::string_view to_string(StatusEvent e);
/// Parsers throw Error(kInvalidArgument) on unknown names.
Kind kind_from_string(std::string_view s);
Status status_from_string(std::string_view s);
StatusEvent status_event_from_string(std::string_view s);

struct Attribution {
    std::string ai_developer;
    std::optional<std::string> initiating_human;
};

struct Comment {
    std::string author;
    std::string body;
    Timestamp created_at = 0;
};

struct SubmissionVersion {
    int version = 1;
    std::string body;
    std::optional<std::string> source_pdf;  // blob reference (content hash)
    std::optional<std::string> response_letter;
    Timestamp created_at = 0;
};

/// A review job attached to a submission. The report is kept as the validated
/// JSON document so the core model stays independent of the review engines.
struct ReviewRecord {
    std::string review_id;
    std::string mode;  // "single" | "meta"
    int version = 1;
    std::string state;  // "pending" | "done" | "failed"
    nlohmann::json report;
    std::string error;
};

struct ExternalReview {
    std::string agent_id;
    bool accept = false;
};

struct VersionComparison {
    int old_version = 0;
    int new_version = 0;
    std::string winner;  // "old" | "new" | "tie"
};

enum class EventType {
    kCreated,
    kRevisionAdded,
    kTransitioned,
    kDoiAssigned,
    kLiked,
    kCommented,
    kReviewRequested,
    kReviewCompleted,
    kReviewFailed,
    kPanelRecorded,
    kExternalReviewRecorded,
    kComparisonRecorded,
};

std::string_view to_string(EventType t);
EventType event_type_from_string(std::string_view s);

/// One entry of the append-only log. `seq` is assigned by the store on commit.
struct Event {
    std::uint64_t seq = 0;
    std::string submission_id;
    EventType type = EventType::kCreated;
    nlohmann::json payload;
};

void to_json(nlohmann::json& j, const Event& e);
void from_json(const nlohmann::json& j, Event& e);

struct Submission {
    std::string id;
    Kind kind = Kind::kProposal;
    std::vector<SubmissionVersion> versions;
    Status status = Status::kSubmitted;
    Attribution attribution;
    std::optional<std::string> doi;
    std::int64_t likes = 0;
    std::vector<Comment> comments;

    std::vector<ReviewRecord> reviews;
    std::vector<nlohmann::json> panel_outcomes;
    std::vector<ExternalReview> external_reviews;
    std::vector<VersionComparison> comparisons;
    std::uint64_t created_seq = 0;
    Timestamp created_at = 0;

    /// Events applied since the last commit; never serialized.
    std::vector<Event> pending_events;

    const SubmissionVersion& latest() const { return versions.back(); }
    const SubmissionVersion& version(int v) const;
    const ReviewRecord* find_review(std::string_view review_id) const;
};

void to_json(nlohmann::json& j, const Attribution& a);
void from_json(const nlohmann::json& j, Attribution& a);
void to_json(nlohmann::json& j, const Comment& c);
void from_json(const nlohmann::json& j, Comment& c);
void to_json(nlohmann::json& j, const SubmissionVersion& v);
void from_json(const nlohmann::json& j, SubmissionVersion& v);
void to_json(nlohmann::json& j, const ReviewRecord& r);
void from_json(const nlohmann::json& j, ReviewRecord& r);
void to_json(nlohmann::json& j, const ExternalReview& r);
void from_json(const nlohmann::json& j, ExternalReview& r);
void to_json(nlohmann::json& j, const VersionComparison& c);
void from_json(const nlohmann::json& j, VersionComparison& c);
void to_json(nlohmann::json& j, const Submission& s);
void from_json(const nlohmann::json& j, Submission& s);

}  // namespace peerloop::core
