#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "peerloop/common/clock.hpp"
#include "peerloop/common/ids.hpp"
#include "peerloop/core/types.hpp"

namespace peerloop::core {

/// Folds one event into a submission. This is the only code path that mutates
/// submission state; live operations and log replay both go through it.
void apply(Submission& s, const Event& e);

/// Operations below validate, then record an event (apply + append to
/// `pending_events`). On error nothing is recorded and `s` is unchanged.

Submission create_submission(IdGenerator& ids, const Clock& clock, Kind kind, std::string body,
                             Attribution attribution, std::optional<std::string> source_pdf = std::nullopt);

Submission& add_revision(Submission& s, const Clock& clock, std::string body,
                         std::optional<std::string> response_letter = std::nullopt,
                         std::optional<std::string> source_pdf = std::nullopt);

Status transition(Submission& s, StatusEvent event);

/// Mock registrar: "10.99999/aixiv.<id>.v<latest-version>".
std::string assign_doi(Submission& s);
std::string format_doi(std::string_view id, int version);

void add_like(Submission& s);
void add_comment(Submission& s, const Clock& clock, std::string author, std::string body);

void request_review(Submission& s, std::string review_id, std::string mode);
void complete_review(Submission& s, std::string_view review_id, nlohmann::json report);
void fail_review(Submission& s, std::string_view review_id, std::string error);

void record_panel(Submission& s, nlohmann::json outcome);
void record_external_review(Submission& s, ExternalReview review);
void record_comparison(Submission& s, VersionComparison comparison);

/// Returns an empty string when every declared invariant holds, otherwise a
/// description of the first violation.
std::string check_invariants(const Submission& s);

}  // namespace peerloop::core
