#include "peerloop/core/types.hpp"

#include <array>
#include <string>

#include "peerloop/common/error.hpp"

namespace peerloop::core {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table, const char* what) {
    for (const auto& [value, name] : table) {
        if (name == s) return value;
    }
    throw Error(ErrorCode::kInvalidArgument, std::string("unknown ") + what + " '" + std::string(s) + "'");
}

template <typename E, std::size_t N>
std::string_view name_of(E v, const std::array<std::pair<E, std::string_view>, N>& table) {
    for (const auto& [value, name] : table) {
        if (value == v) return name;
    }
    return "?";
}

constexpr std::array<std::pair<Kind, std::string_view>, 2> kKindNames{{
    {Kind::kProposal, "Proposal"},
    {Kind::kPaper, "Paper"},
}};

constexpr std::array<std::pair<Status, std::string_view>, 8> kStatusNames{{
    {Status::kSubmitted, "Submitted"},
    {Status::kQuarantined, "Quarantined"},
    {Status::kUnderReview, "UnderReview"},
    {Status::kRevisionRequested, "RevisionRequested"},
    {Status::kResubmitted, "Resubmitted"},
    {Status::kProvisionallyAccepted, "ProvisionallyAccepted"},
    {Status::kAccepted, "Accepted"},
    {Status::kRejected, "Rejected"},
}};

constexpr std::array<std::pair<StatusEvent, std::string_view>, 7> kStatusEventNames{{
    {StatusEvent::kScanPassed, "ScanPassed"},
    {StatusEvent::kScanFailed, "ScanFailed"},
    {StatusEvent::kReviewComplete, "ReviewComplete"},
    {StatusEvent::kRevisionSubmitted, "RevisionSubmitted"},
    {StatusEvent::kVoteAccept, "VoteAccept"},
    {StatusEvent::kVoteReject, "VoteReject"},
    {StatusEvent::kExternalThresholdMet, "ExternalThresholdMet"},
}};

constexpr std::array<std::pair<EventType, std::string_view>, 12> kEventTypeNames{{
    {EventType::kCreated, "created"},
    {EventType::kRevisionAdded, "revision_added"},
    {EventType::kTransitioned, "transitioned"},
    {EventType::kDoiAssigned, "doi_assigned"},
    {EventType::kLiked, "liked"},
    {EventType::kCommented, "commented"},
    {EventType::kReviewRequested, "review_requested"},
    {EventType::kReviewCompleted, "review_completed"},
    {EventType::kReviewFailed, "review_failed"},
    {EventType::kPanelRecorded, "panel_recorded"},
    {EventType::kExternalReviewRecorded, "external_review_recorded"},
    {EventType::kComparisonRecorded, "comparison_recorded"},
}};

}  // namespace

std::string_view to_string(Kind k) { return name_of(k, kKindNames); }
std::string_view to_string(Status s) { return name_of(s, kStatusNames); }
std::string_view to_string(StatusEvent e) { return name_of(e, kStatusEventNames); }
std::string_view to_string(EventType t) { return name_of(t, kEventTypeNames); }

Kind kind_from_string(std::string_view s) {
    // Lower-case spellings are accepted on the wire.
    if (s == "proposal") return Kind::kProposal;
    if (s == "paper") return Kind::kPaper;
    return parse_enum(s, kKindNames, "kind");
}
Status status_from_string(std::string_view s) { return parse_enum(s, kStatusNames, "status"); }
StatusEvent status_event_from_string(std::string_view s) { return parse_enum(s, kStatusEventNames, "event"); }
EventType event_type_from_string(std::string_view s) { return parse_enum(s, kEventTypeNames, "event type"); }

const SubmissionVersion& Submission::version(int v) const {
    for (const auto& sv : versions) {
        if (sv.version == v) return sv;
    }
    throw Error(ErrorCode::kNotFound, "submission " + id + " has no version " + std::to_string(v));
}

const ReviewRecord* Submission::find_review(std::string_view review_id) const {
    for (const auto& r : reviews) {
        if (r.review_id == review_id) return &r;
    }
    return nullptr;
}

// JSON ------------------------------------------------------------------------

namespace {

template <typename T>
void put_optional(nlohmann::json& j, const char* key, const std::optional<T>& v) {
    if (v) j[key] = *v;
    else j[key] = nullptr;
}

template <typename T>
std::optional<T> get_optional(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<T>();
}

}  // namespace

void to_json(nlohmann::json& j, const Attribution& a) {
    j = nlohmann::json{{"ai_developer", a.ai_developer}};
    put_optional(j, "initiating_human", a.initiating_human);
}

void from_json(const nlohmann::json& j, Attribution& a) {
    a.ai_developer = j.at("ai_developer").get<std::string>();
    a.initiating_human = get_optional<std::string>(j, "initiating_human");
}

void to_json(nlohmann::json& j, const Comment& c) {
    j = nlohmann::json{{"author", c.author}, {"body", c.body}, {"created_at", c.created_at}};
}

void from_json(const nlohmann::json& j, Comment& c) {
    c.author = j.at("author").get<std::string>();
    c.body = j.at("body").get<std::string>();
    c.created_at = j.at("created_at").get<Timestamp>();
}

void to_json(nlohmann::json& j, const SubmissionVersion& v) {
    j = nlohmann::json{{"version", v.version}, {"body", v.body}, {"created_at", v.created_at}};
    put_optional(j, "source_pdf", v.source_pdf);
    put_optional(j, "response_letter", v.response_letter);
}

void from_json(const nlohmann::json& j, SubmissionVersion& v) {
    v.version = j.at("version").get<int>();
    v.body = j.at("body").get<std::string>();
    v.created_at = j.at("created_at").get<Timestamp>();
    v.source_pdf = get_optional<std::string>(j, "source_pdf");
    v.response_letter = get_optional<std::string>(j, "response_letter");
}

void to_json(nlohmann::json& j, const ReviewRecord& r) {
    j = nlohmann::json{{"review_id", r.review_id}, {"mode", r.mode},   {"version", r.version},
                       {"state", r.state},         {"report", r.report}, {"error", r.error}};
}

void from_json(const nlohmann::json& j, ReviewRecord& r) {
    r.review_id = j.at("review_id").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.version = j.at("version").get<int>();
    r.state = j.at("state").get<std::string>();
    r.report = j.at("report");
    r.error = j.at("error").get<std::string>();
}

void to_json(nlohmann::json& j, const ExternalReview& r) {
    j = nlohmann::json{{"agent_id", r.agent_id}, {"accept", r.accept}};
}

void from_json(const nlohmann::json& j, ExternalReview& r) {
    r.agent_id = j.at("agent_id").get<std::string>();
    r.accept = j.at("accept").get<bool>();
}

void to_json(nlohmann::json& j, const VersionComparison& c) {
    j = nlohmann::json{{"old_version", c.old_version}, {"new_version", c.new_version}, {"winner", c.winner}};
}

void from_json(const nlohmann::json& j, VersionComparison& c) {
    c.old_version = j.at("old_version").get<int>();
    c.new_version = j.at("new_version").get<int>();
    c.winner = j.at("winner").get<std::string>();
}

void to_json(nlohmann::json& j, const Submission& s) {
    j = nlohmann::json{
        {"id", s.id},
        {"kind", to_string(s.kind)},
        {"versions", s.versions},
        {"status", to_string(s.status)},
        {"attribution", s.attribution},
        {"likes", s.likes},
        {"comments", s.comments},
        {"reviews", s.reviews},
        {"panel_outcomes", s.panel_outcomes},
        {"external_reviews", s.external_reviews},
        {"comparisons", s.comparisons},
        {"created_seq", s.created_seq},
        {"created_at", s.created_at},
    };
    put_optional(j, "doi", s.doi);
}

void from_json(const nlohmann::json& j, Submission& s) {
    s.id = j.at("id").get<std::string>();
    s.kind = kind_from_string(j.at("kind").get<std::string>());
    s.versions = j.at("versions").get<std::vector<SubmissionVersion>>();
    s.status = status_from_string(j.at("status").get<std::string>());
    s.attribution = j.at("attribution").get<Attribution>();
    s.doi = get_optional<std::string>(j, "doi");
    s.likes = j.at("likes").get<std::int64_t>();
    s.comments = j.at("comments").get<std::vector<Comment>>();
    s.reviews = j.at("reviews").get<std::vector<ReviewRecord>>();
    s.panel_outcomes = j.at("panel_outcomes").get<std::vector<nlohmann::json>>();
    s.external_reviews = j.at("external_reviews").get<std::vector<ExternalReview>>();
    s.comparisons = j.at("comparisons").get<std::vector<VersionComparison>>();
    s.created_seq = j.at("created_seq").get<std::uint64_t>();
    s.created_at = j.at("created_at").get<Timestamp>();
}

void to_json(nlohmann::json& j, const Event& e) {
    j = nlohmann::json{
        {"seq", e.seq}, {"submission_id", e.submission_id}, {"type", to_string(e.type)}, {"payload", e.payload}};
}

void from_json(const nlohmann::json& j, Event& e) {
    e.seq = j.at("seq").get<std::uint64_t>();
    e.submission_id = j.at("submission_id").get<std::string>();
    e.type = event_type_from_string(j.at("type").get<std::string>());
    e.payload = j.at("payload");
}

}  // namespace peerloop::core
