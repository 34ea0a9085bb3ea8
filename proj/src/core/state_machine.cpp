#include "peerloop/core/state_machine.hpp"

namespace peerloop::core {

namespace {

struct Edge {
    Status from;
    StatusEvent event;
    Status to;
};

// Quarantined, Accepted and Rejected have no outgoing edges.
constexpr Edge kEdges[] = {
    {Status::kSubmitted, StatusEvent::kScanPassed, Status::kUnderReview},
    {Status::kSubmitted, StatusEvent::kScanFailed, Status::kQuarantined},

    {Status::kUnderReview, StatusEvent::kReviewComplete, Status::kRevisionRequested},
    {Status::kUnderReview, StatusEvent::kRevisionSubmitted, Status::kResubmitted},
    {Status::kUnderReview, StatusEvent::kVoteAccept, Status::kProvisionallyAccepted},
    {Status::kUnderReview, StatusEvent::kVoteReject, Status::kRejected},

    {Status::kRevisionRequested, StatusEvent::kRevisionSubmitted, Status::kResubmitted},
    {Status::kRevisionRequested, StatusEvent::kVoteAccept, Status::kProvisionallyAccepted},
    {Status::kRevisionRequested, StatusEvent::kVoteReject, Status::kRejected},

    {Status::kResubmitted, StatusEvent::kScanFailed, Status::kQuarantined},
    {Status::kResubmitted, StatusEvent::kReviewComplete, Status::kRevisionRequested},
    {Status::kResubmitted, StatusEvent::kVoteAccept, Status::kProvisionallyAccepted},
    {Status::kResubmitted, StatusEvent::kVoteReject, Status::kRejected},

    {Status::kProvisionallyAccepted, StatusEvent::kExternalThresholdMet, Status::kAccepted},
};

}  // namespace

std::optional<Status> next_state(Status from, StatusEvent event) {
    for (const auto& e : kEdges) {
        if (e.from == from && e.event == event) return e.to;
    }
    return std::nullopt;
}

std::vector<std::pair<Status, StatusEvent>> declared_edges() {
    std::vector<std::pair<Status, StatusEvent>> out;
    for (const auto& e : kEdges) out.emplace_back(e.from, e.event);
    return out;
}

bool is_terminal(Status s) {
    for (const auto& e : kEdges) {
        if (e.from == s) return false;
    }
    return true;
}

}  // namespace peerloop::core
