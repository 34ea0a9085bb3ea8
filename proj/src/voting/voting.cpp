#include "peerloop/voting/voting.hpp"

#include <future>
#include <set>

#include <fmt/format.h>

#include "peerloop/common/error.hpp"
#include "peerloop/common/text.hpp"
#include "peerloop/core/submission.hpp"
#include "peerloop/llm/budget.hpp"
#include "peerloop/llm/schemas.hpp"

namespace peerloop::voting {

using nlohmann::json;

void to_json(json& j, const VoteDecision& v) {
    j = json{{"model_id", v.model_id},
             {"decision", v.accept ? "accept" : "reject"},
             {"confidence", v.confidence},
             {"reasons", v.reasons},
             {"scores", v.scores},
             {"used_lit_search", v.used_lit_search}};
    if (!v.error.empty()) j["error"] = v.error;
}

void from_json(const json& j, VoteDecision& v) {
    v.model_id = j.at("model_id").get<std::string>();
    v.accept = j.at("decision").get<std::string>() == "accept";
    v.confidence = j.value("confidence", 0.0);
    v.reasons = j.value("reasons", std::vector<std::string>{});
    v.scores = j.value("scores", std::map<std::string, double>{});
    v.used_lit_search = j.value("used_lit_search", false);
    v.error = j.value("error", "");
}

void to_json(json& j, const PanelOutcome& o) {
    j = json{{"votes", o.votes}, {"accepted", o.accepted}, {"accept_count", o.accept_count}};
}

void from_json(const json& j, PanelOutcome& o) {
    o.votes = j.at("votes").get<std::vector<VoteDecision>>();
    o.accepted = j.at("accepted").get<bool>();
    o.accept_count = j.at("accept_count").get<int>();
}

PanelOutcome tally(const std::vector<VoteDecision>& votes) {
    if (votes.size() != llm::ModelPanel::kSize)
        throw Error(ErrorCode::kWrongPanelSize,
                    fmt::format("panel needs exactly {} votes, got {}", llm::ModelPanel::kSize, votes.size()));
    std::set<std::string> models;
    for (const auto& v : votes)
        if (!models.insert(v.model_id).second)
            throw Error(ErrorCode::kDuplicateModel, "model '" + v.model_id + "' voted twice");
    PanelOutcome o;
    o.votes = votes;
    for (const auto& v : votes) o.accept_count += v.accept ? 1 : 0;
    o.accepted = o.accept_count >= kAcceptQuorum;
    return o;
}

VoteDecision parse_vote(const json& reply, core::Kind kind, std::string model_id) {
    const auto schema = kind == core::Kind::kProposal
                            ? llm::schemas::vote_schema(llm::schemas::proposal_vote_scores(), false)
                            : llm::schemas::vote_schema(llm::schemas::paper_vote_scores(), true);
    const auto errors = schema.validate(reply);
    if (!errors.empty())
        throw Error(ErrorCode::kSchemaViolation, fmt::format("vote rejected: {}", fmt::join(errors, "; ")));
    VoteDecision v;
    v.model_id = std::move(model_id);
    v.accept = reply["decision"] == "accept";
    v.confidence = reply["confidence"].get<double>();
    v.reasons = reply["reasons"].get<std::vector<std::string>>();
    v.scores = reply["scores"].get<std::map<std::string, double>>();
    v.used_lit_search = reply["meta"]["used_lit_search"].get<bool>();
    return v;
}

VotingPanel::VotingPanel(llm::Gateway& gateway, lit::SearchClient* search, const llm::PromptLibrary& prompts,
                         VotingConfig config)
    : gateway_(gateway), search_(search), prompts_(prompts), config_(config) {}

llm::ChatRequest VotingPanel::build_request(std::string_view body, core::Kind kind, const std::string& model_id,
                                            const std::string& literature, const RevisionContext& revision) const {
    const bool proposal = kind == core::Kind::kProposal;
    std::string document =
        llm::truncate_to_budget(body, llm::TokenBudget(proposal ? config_.proposal_budget : config_.paper_budget));
    if (!revision.empty()) {
        std::string context;
        for (std::size_t i = 0; i < revision.prior_reviews.size(); ++i)
            context += fmt::format("\n\nPREVIOUS REVIEW RESULTS ({}):\n{}", i + 1, revision.prior_reviews[i]);
        if (revision.response_letter) context += "\n\nRESPONSE LETTER:\n" + *revision.response_letter;
        document += llm::truncate_to_budget(context, llm::TokenBudget(config_.revision_context_budget));
    }
    llm::ChatRequest req;
    req.model_id = model_id;
    req.messages.push_back(
        {llm::Role::kUser,
         prompts_.render(proposal ? "vote_proposal" : "vote_paper",
                         {{proposal ? "proposal_text" : "paper_text", document},
                          {"literature_text", literature.empty() ? std::string("(not available)") : literature}})});
    return req;
}

VoteDecision VotingPanel::vote_with_literature(std::string_view body, core::Kind kind, const std::string& model_id,
                                               const std::string& literature, const RevisionContext& revision) {
    const auto req = build_request(body, kind, model_id, literature, revision);
    const auto schema_id = kind == core::Kind::kProposal ? llm::schemas::kVoteProposal : llm::schemas::kVotePaper;
    return parse_vote(gateway_.complete_structured(req, schema_id), kind, model_id);
}

namespace {

std::string literature_text(lit::SearchClient* search, std::string_view body, const VotingConfig& c, bool use_rag) {
    if (!use_rag) return {};
    return lit::gather_literature(search, body, c.literature_k, llm::TokenBudget(c.literature_budget), true).block.text;
}

}  // namespace

VoteDecision VotingPanel::cast_vote(std::string_view body, core::Kind kind, const std::string& model_id, bool use_rag,
                                    const RevisionContext& revision) {
    if (text::trim(body).empty()) throw Error(ErrorCode::kEmptyBody, "cannot vote on an empty document");
    return vote_with_literature(body, kind, model_id, literature_text(search_, body, config_, use_rag), revision);
}

PanelOutcome VotingPanel::run_panel(std::string_view body, core::Kind kind, const llm::ModelPanel& panel,
                                    bool use_rag, const RevisionContext& revision) {
    if (text::trim(body).empty()) throw Error(ErrorCode::kEmptyBody, "cannot vote on an empty document");
    const std::string literature = literature_text(search_, body, config_, use_rag);

    std::vector<std::future<VoteDecision>> futures;
    for (const auto& model : panel.model_ids())
        futures.push_back(std::async(std::launch::async, [&, model] {
            return vote_with_literature(body, kind, model, literature, revision);
        }));

    std::vector<VoteDecision> votes;
    for (std::size_t i = 0; i < futures.size(); ++i) {
        try {
            votes.push_back(futures[i].get());
        } catch (const Error& e) {
            VoteDecision failed;
            failed.model_id = panel.model_ids()[i];
            failed.error = e.what();
            votes.push_back(std::move(failed));
        }
    }
    return tally(votes);
}

UpgradeProgress upgrade_progress(const core::Submission& s, const ExternalReviewPolicy& policy) {
    std::map<std::string, bool> latest;
    for (const auto& r : s.external_reviews) latest[r.agent_id] = r.accept;
    UpgradeProgress p;
    p.distinct_reviewers = latest.size();
    for (const auto& [agent, accept] : latest) p.accepts += accept ? 1 : 0;
    p.threshold_met = p.distinct_reviewers >= policy.min_reviewers &&
                      static_cast<double>(p.accepts) >= policy.min_accept_fraction * static_cast<double>(p.distinct_reviewers);
    return p;
}

UpgradeProgress record_external_review(core::Submission& s, core::ExternalReview review,
                                       const ExternalReviewPolicy& policy) {
    if (s.status != core::Status::kProvisionallyAccepted)
        throw Error(ErrorCode::kIllegalState,
                    fmt::format("external reviews need ProvisionallyAccepted, submission is {}", core::to_string(s.status)));
    if (review.agent_id.empty()) throw Error(ErrorCode::kInvalidArgument, "agent id must not be empty");
    core::record_external_review(s, std::move(review));
    auto p = upgrade_progress(s, policy);
    if (p.threshold_met) core::transition(s, core::StatusEvent::kExternalThresholdMet);
    return p;
}

}  // namespace peerloop::voting
