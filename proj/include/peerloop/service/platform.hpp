#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "peerloop/common/clock.hpp"
#include "peerloop/common/ids.hpp"
#include "peerloop/core/store.hpp"
#include "peerloop/core/types.hpp"
#include "peerloop/guard/scan.hpp"
#include "peerloop/lit/retrieval.hpp"
#include "peerloop/llm/gateway.hpp"
#include "peerloop/llm/prompt.hpp"
#include "peerloop/meta/meta_review.hpp"
#include "peerloop/meta/standard.hpp"
#include "peerloop/review/single.hpp"
#include "peerloop/service/config.hpp"
#include "peerloop/service/jobs.hpp"
#include "peerloop/voting/voting.hpp"

namespace peerloop::service {

struct SubmitRequest {
    core::Kind kind = core::Kind::kProposal;
    std::string body;
    std::optional<std::string> pdf;  // raw bytes; the body is then extracted from it
    core::Attribution attribution;
};

struct SubmitResult {
    core::Submission submission;
    guard::ScanReport scan;
    bool quarantined = false;
};

struct RevisionRequest {
    std::string body;
    std::optional<std::string> pdf;
    std::optional<std::string> response_letter;
};

struct RevisionResult {
    core::Submission submission;
    guard::ScanReport scan;
    bool quarantined = false;
    std::optional<std::string> review_id;  // auto re-review, when enqueued
};

struct DecisionJob {
    std::string state;  // "pending" | "done" | "failed"
    nlohmann::json outcome;
    std::string error;
};

struct FeedItem {
    std::string id;
    core::Kind kind = core::Kind::kProposal;
    std::string title;
    core::Status status = core::Status::kSubmitted;
    int version = 1;
    std::int64_t likes = 0;
    std::size_t comments = 0;
    std::optional<std::string> doi;
    Timestamp created_at = 0;
};

struct FeedPage {
    int page = 1;
    int page_size = 10;
    std::size_t total = 0;
    int pages = 0;
    std::vector<FeedItem> items;
};

void to_json(nlohmann::json& j, const FeedItem& f);
void to_json(nlohmann::json& j, const FeedPage& p);

/// First non-blank line of a document, without markdown heading marks.
std::string title_of(std::string_view body);

/// The closed loop over one submission store: admission scan, review jobs,
/// revisions, panel decisions and engagement. Every state change goes
/// through the core operations and the store's single-writer rule.
class Platform {
public:
    Platform(ServiceConfig config, llm::Gateway& gateway, lit::SearchClient* search,
             const llm::PromptLibrary& prompts, const Clock& clock);
    ~Platform();

    Platform(const Platform&) = delete;
    Platform& operator=(const Platform&) = delete;

    /// Flagged documents are stored as Quarantined and reported, not thrown.
    SubmitResult submit(SubmitRequest request);

    /// Records a pending review and runs it on the job queue (or inline with
    /// `wait`). Throws kIllegalState unless UnderReview or Resubmitted.
    core::ReviewRecord request_review(const std::string& id, const std::string& mode, bool use_rag, bool wait = false);
    core::ReviewRecord get_review(const std::string& id, const std::string& review_id) const;

    /// Throws kIllegalState unless RevisionRequested.
    RevisionResult revise(const std::string& id, RevisionRequest request);

    /// Runs the five-model panel and commits the verdict; accepted
    /// submissions get a DOI.
    voting::PanelOutcome decide(const std::string& id, bool use_rag);
    /// Queues the panel run; poll with decision_status.
    DecisionJob decide_async(const std::string& id, bool use_rag);
    std::optional<DecisionJob> decision_status(const std::string& id) const;

    voting::UpgradeProgress add_external_review(const std::string& id, core::ExternalReview review);

    std::int64_t like(const std::string& id);
    core::Submission comment(const std::string& id, std::string author, std::string body);

    /// 1-based; Quarantined submissions are not listed.
    FeedPage feed(int page) const;

    core::Submission get(const std::string& id) const { return store_->get(id); }

    /// Waits for every queued job.
    void drain() { jobs_.wait_idle(); }

    core::SubmissionStore& store() { return *store_; }
    const ServiceConfig& config() const { return config_; }
    const meta::ReviewStandard& standard(core::Kind kind) const;

private:
    void check_decidable(const core::Submission& s) const;
    guard::ScanReport scan_document(std::optional<std::string>& pdf, std::string& body,
                                    const std::optional<std::string>& extra) const;
    void enqueue_review(const std::string& id, const std::string& review_id, const std::string& mode, bool use_rag);
    void execute_review(const std::string& id, const std::string& review_id, const std::string& mode, bool use_rag);
    voting::RevisionContext revision_context(const core::Submission& s) const;
    voting::PanelOutcome run_decision(const std::string& id, bool use_rag);

    ServiceConfig config_;
    llm::Gateway& gateway_;
    const Clock& clock_;
    IdGenerator ids_;
    std::unique_ptr<core::SubmissionStore> store_;
    std::map<core::Kind, meta::ReviewStandard> standards_;

    guard::Scanner scanner_;
    review::ReviewEngine reviewer_;
    meta::MetaReviewer meta_;
    voting::VotingPanel panel_;

    mutable std::mutex decisions_mutex_;
    std::map<std::string, DecisionJob> decisions_;
    std::set<std::string> deciding_;

    JobQueue jobs_;  // last member: workers stop before the engines they use go away
};

}  // namespace peerloop::service
