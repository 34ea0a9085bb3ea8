#include "peerloop/core/submission.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include <fmt/format.h>

#include "peerloop/common/error.hpp"
#include "peerloop/core/state_machine.hpp"

namespace peerloop::core {

namespace {

using nlohmann::json;

void record(Submission& s, EventType type, json payload) {
    Event e{0, s.id, type, std::move(payload)};
    apply(s, e);
    s.pending_events.push_back(std::move(e));
}

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

ReviewRecord& review_ref(Submission& s, std::string_view review_id) {
    for (auto& r : s.reviews) {
        if (r.review_id == review_id) return r;
    }
    throw Error(ErrorCode::kNotFound, fmt::format("review {} not found on {}", review_id, s.id));
}

}  // namespace

void apply(Submission& s, const Event& e) {
    const json& p = e.payload;
    switch (e.type) {
        case EventType::kCreated: {
            s = Submission{};
            s.id = e.submission_id;
            s.kind = kind_from_string(p.at("kind").get<std::string>());
            s.attribution = p.at("attribution").get<Attribution>();
            s.created_at = p.at("created_at").get<Timestamp>();
            s.created_seq = e.seq;
            s.versions.push_back(p.at("version").get<SubmissionVersion>());
            s.status = Status::kSubmitted;
            break;
        }
        case EventType::kRevisionAdded:
            s.versions.push_back(p.get<SubmissionVersion>());
            break;
        case EventType::kTransitioned:
            s.status = status_from_string(p.at("to").get<std::string>());
            break;
        case EventType::kDoiAssigned:
            s.doi = p.at("doi").get<std::string>();
            break;
        case EventType::kLiked:
            ++s.likes;
            break;
        case EventType::kCommented:
            s.comments.push_back(p.get<Comment>());
            break;
        case EventType::kReviewRequested:
            s.reviews.push_back(ReviewRecord{p.at("review_id").get<std::string>(), p.at("mode").get<std::string>(),
                                             p.at("version").get<int>(), "pending", nullptr, ""});
            break;
        case EventType::kReviewCompleted: {
            auto& r = review_ref(s, p.at("review_id").get<std::string>());
            r.state = "done";
            r.report = p.at("report");
            break;
        }
        case EventType::kReviewFailed: {
            auto& r = review_ref(s, p.at("review_id").get<std::string>());
            r.state = "failed";
            r.error = p.at("error").get<std::string>();
            break;
        }
        case EventType::kPanelRecorded:
            s.panel_outcomes.push_back(p);
            break;
        case EventType::kExternalReviewRecorded:
            s.external_reviews.push_back(p.get<ExternalReview>());
            break;
        case EventType::kComparisonRecorded:
            s.comparisons.push_back(p.get<VersionComparison>());
            break;
    }
}

Submission create_submission(IdGenerator& ids, const Clock& clock, Kind kind, std::string body,
                             Attribution attribution, std::optional<std::string> source_pdf) {
    if (body.empty() || is_blank(body)) throw Error(ErrorCode::kEmptyBody, "submission body is empty");
    if (attribution.ai_developer.empty())
        throw Error(ErrorCode::kInvalidArgument, "attribution.ai_developer must be non-empty");

    const Timestamp now = clock.now();
    SubmissionVersion v1{1, std::move(body), std::move(source_pdf), std::nullopt, now};
    Submission s;
    s.id = ids.next();
    record(s, EventType::kCreated,
           json{{"kind", to_string(kind)}, {"attribution", attribution}, {"created_at", now}, {"version", v1}});
    return s;
}

Submission& add_revision(Submission& s, const Clock& clock, std::string body,
                         std::optional<std::string> response_letter, std::optional<std::string> source_pdf) {
    if (s.status != Status::kRevisionRequested && s.status != Status::kUnderReview) {
        throw Error(ErrorCode::kIllegalState,
                    fmt::format("cannot revise submission {} in state {}", s.id, to_string(s.status)));
    }
    if (body.empty() || is_blank(body)) throw Error(ErrorCode::kEmptyBody, "revision body is empty");
    if (response_letter && response_letter->empty()) response_letter.reset();

    SubmissionVersion v{s.latest().version + 1, std::move(body), std::move(source_pdf), std::move(response_letter),
                        clock.now()};
    record(s, EventType::kRevisionAdded, json(v));
    transition(s, StatusEvent::kRevisionSubmitted);
    return s;
}

Status transition(Submission& s, StatusEvent event) {
    const auto next = next_state(s.status, event);
    if (!next) {
        throw Error(ErrorCode::kIllegalTransition,
                    fmt::format("{} is not allowed from {}", to_string(event), to_string(s.status)));
    }
    record(s, EventType::kTransitioned,
           json{{"event", to_string(event)}, {"from", to_string(s.status)}, {"to", to_string(*next)}});
    return *next;
}

std::string format_doi(std::string_view id, int version) {
    return fmt::format("10.99999/aixiv.{}.v{}", id, version);
}

std::string assign_doi(Submission& s) {
    if (s.doi) throw Error(ErrorCode::kAlreadyAssigned, "DOI already assigned to " + s.id);
    if (s.status != Status::kProvisionallyAccepted && s.status != Status::kAccepted) {
        throw Error(ErrorCode::kIllegalState,
                    fmt::format("DOI requires an accepted submission; {} is {}", s.id, to_string(s.status)));
    }
    auto doi = format_doi(s.id, s.latest().version);
    record(s, EventType::kDoiAssigned, json{{"doi", doi}});
    return doi;
}

void add_like(Submission& s) { record(s, EventType::kLiked, json::object()); }

void add_comment(Submission& s, const Clock& clock, std::string author, std::string body) {
    if (body.empty() || is_blank(body)) throw Error(ErrorCode::kEmptyBody, "comment body is empty");
    record(s, EventType::kCommented, json(Comment{std::move(author), std::move(body), clock.now()}));
}

void request_review(Submission& s, std::string review_id, std::string mode) {
    record(s, EventType::kReviewRequested,
           json{{"review_id", std::move(review_id)}, {"mode", std::move(mode)}, {"version", s.latest().version}});
}

void complete_review(Submission& s, std::string_view review_id, json report) {
    review_ref(s, review_id);
    record(s, EventType::kReviewCompleted, json{{"review_id", review_id}, {"report", std::move(report)}});
}

void fail_review(Submission& s, std::string_view review_id, std::string error) {
    review_ref(s, review_id);
    record(s, EventType::kReviewFailed, json{{"review_id", review_id}, {"error", std::move(error)}});
}

void record_panel(Submission& s, json outcome) { record(s, EventType::kPanelRecorded, std::move(outcome)); }

void record_external_review(Submission& s, ExternalReview review) {
    record(s, EventType::kExternalReviewRecorded, json(review));
}

void record_comparison(Submission& s, VersionComparison comparison) {
    record(s, EventType::kComparisonRecorded, json(comparison));
}

std::string check_invariants(const Submission& s) {
    if (s.versions.empty()) return "versions empty";
    for (std::size_t i = 0; i < s.versions.size(); ++i) {
        const auto& v = s.versions[i];
        if (v.version != static_cast<int>(i) + 1) return "version numbers not 1..n";
        if (v.body.empty()) return "empty version body";
        if (v.response_letter && v.version == 1) return "response letter on version 1";
    }
    const bool accepted = s.status == Status::kProvisionallyAccepted || s.status == Status::kAccepted;
    if (accepted != s.doi.has_value()) return "doi presence does not match status";
    if (s.doi) {
        static const std::regex kDoi(R"(10\.99999/aixiv\.[0-9a-zA-Z]+\.v[1-9][0-9]*)");
        if (!std::regex_match(*s.doi, kDoi)) return "doi format";
    }
    if (s.likes < 0) return "negative likes";
    if (s.attribution.ai_developer.empty()) return "empty ai_developer";
    return {};
}

}  // namespace peerloop::core
