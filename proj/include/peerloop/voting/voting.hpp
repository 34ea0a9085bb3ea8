#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "peerloop/core/types.hpp"
#include "peerloop/lit/retrieval.hpp"
#include "peerloop/llm/chat.hpp"
#include "peerloop/llm/gateway.hpp"
#include "peerloop/llm/prompt.hpp"

namespace peerloop::voting {

struct VoteDecision {
    std::string model_id;
    bool accept = false;
    double confidence = 0.0;
    std::vector<std::string> reasons;
    std::map<std::string, double> scores;
    bool used_lit_search = false;
    std::string error;  // set when the vote failed and was counted as reject

    bool operator==(const VoteDecision&) const = default;
};

struct PanelOutcome {
    std::vector<VoteDecision> votes;
    bool accepted = false;
    int accept_count = 0;
};

void to_json(nlohmann::json& j, const VoteDecision& v);
void from_json(const nlohmann::json& j, VoteDecision& v);
void to_json(nlohmann::json& j, const PanelOutcome& o);
void from_json(const nlohmann::json& j, PanelOutcome& o);

inline constexpr int kAcceptQuorum = 3;

/// Exactly five votes from distinct models; accepted iff at least three accept.
/// Throws kWrongPanelSize or kDuplicateModel.
PanelOutcome tally(const std::vector<VoteDecision>& votes);

/// Throws kSchemaViolation when the reply does not match the kind's vote schema.
VoteDecision parse_vote(const nlohmann::json& reply, core::Kind kind, std::string model_id);

/// Earlier feedback shown to voters when judging a revised version.
struct RevisionContext {
    std::vector<std::string> prior_reviews;
    std::optional<std::string> response_letter;

    bool empty() const { return prior_reviews.empty() && !response_letter; }
};

struct VotingConfig {
    std::size_t proposal_budget = 3000;
    std::size_t paper_budget = 8000;
    std::size_t revision_context_budget = 4000;
    std::size_t literature_budget = 5000;
    std::size_t literature_k = 5;
};

class VotingPanel {
public:
    VotingPanel(llm::Gateway& gateway, lit::SearchClient* search, const llm::PromptLibrary& prompts,
                VotingConfig config = {});

    VoteDecision cast_vote(std::string_view body, core::Kind kind, const std::string& model_id, bool use_rag,
                           const RevisionContext& revision = {});

    /// Five concurrent votes then tally; a vote that fails after retries counts as reject.
    PanelOutcome run_panel(std::string_view body, core::Kind kind, const llm::ModelPanel& panel, bool use_rag,
                           const RevisionContext& revision = {});

    llm::ChatRequest build_request(std::string_view body, core::Kind kind, const std::string& model_id,
                                   const std::string& literature, const RevisionContext& revision) const;

private:
    VoteDecision vote_with_literature(std::string_view body, core::Kind kind, const std::string& model_id,
                                      const std::string& literature, const RevisionContext& revision);

    llm::Gateway& gateway_;
    lit::SearchClient* search_;
    const llm::PromptLibrary& prompts_;
    VotingConfig config_;
};

struct ExternalReviewPolicy {
    std::size_t min_reviewers = 3;
    double min_accept_fraction = 0.5;
};

struct UpgradeProgress {
    std::size_t distinct_reviewers = 0;
    std::size_t accepts = 0;
    bool threshold_met = false;
};

/// Progress over distinct agents, each counted by its latest verdict.
UpgradeProgress upgrade_progress(const core::Submission& s, const ExternalReviewPolicy& policy);

/// Records the verdict and, once the policy is satisfied, moves the submission
/// to Accepted. Throws kIllegalState unless it is ProvisionallyAccepted.
UpgradeProgress record_external_review(core::Submission& s, core::ExternalReview review,
                                       const ExternalReviewPolicy& policy = {});

}  // namespace peerloop::voting
