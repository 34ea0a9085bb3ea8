#include "peerloop/service/platform.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "peerloop/common/error.hpp"
#include "peerloop/common/text.hpp"
#include "peerloop/core/state_machine.hpp"
#include "peerloop/core/submission.hpp"
#include "peerloop/guard/extract.hpp"
#include "peerloop/pairwise/pairwise.hpp"
#include "peerloop/service/runtime.hpp"

namespace peerloop::service {

using nlohmann::json;
using core::Status;
using core::StatusEvent;

namespace {

std::uint64_t effective_seed(const ServiceConfig& c, const Clock& clock) {
    return c.seed != 0 ? c.seed : static_cast<std::uint64_t>(clock.now());
}

void check_mode(const std::string& mode) {
    if (mode != "single" && mode != "meta")
        throw Error(ErrorCode::kInvalidArgument, fmt::format("review mode must be single or meta, got '{}'", mode));
}

}  // namespace

std::string title_of(std::string_view body) {
    for (const auto& line : text::split_lines(body)) {
        auto t = text::trim(line);
        const auto hashes = t.find_first_not_of('#');
        if (hashes == std::string::npos) continue;
        t = text::trim(std::string_view(t).substr(hashes));
        if (t.empty()) continue;
        if (text::count_code_points(t) > 200) t = t.substr(0, text::byte_offset_of(t, 200));
        return t;
    }
    return {};
}

void to_json(json& j, const FeedItem& f) {
    j = json{{"id", f.id},
             {"kind", core::to_string(f.kind)},
             {"title", f.title},
             {"status", core::to_string(f.status)},
             {"version", f.version},
             {"likes", f.likes},
             {"comments", f.comments},
             {"doi", f.doi ? json(*f.doi) : json(nullptr)},
             {"created_at", f.created_at}};
}

void to_json(json& j, const FeedPage& p) {
    j = json{{"page", p.page}, {"page_size", p.page_size}, {"total", p.total}, {"pages", p.pages}, {"items", p.items}};
}

Platform::Platform(ServiceConfig config, llm::Gateway& gateway, lit::SearchClient* search,
                   const llm::PromptLibrary& prompts, const Clock& clock)
    : config_(std::move(config)),
      gateway_(gateway),
      clock_(clock),
      ids_(effective_seed(config_, clock)),
      store_(config_.data_dir.empty() ? std::make_unique<core::SubmissionStore>()
                                      : std::make_unique<core::SubmissionStore>(config_.data_dir)),
      scanner_(&gateway, prompts, config_.scan),
      reviewer_(gateway, search, prompts, review_config(config_)),
      meta_(gateway, search, prompts, meta_config(config_)),
      panel_(gateway, search, prompts, voting_config(config_)),
      jobs_(config_.limits.workers, config_.limits.queue_capacity) {
    for (auto kind : {core::Kind::kProposal, core::Kind::kPaper}) standards_[kind] = standard_for(config_, kind);
}

Platform::~Platform() { jobs_.shutdown(); }

const meta::ReviewStandard& Platform::standard(core::Kind kind) const { return standards_.at(kind); }

guard::ScanReport Platform::scan_document(std::optional<std::string>& pdf, std::string& body,
                                          const std::optional<std::string>& extra) const {
    if (pdf) {
        const auto doc = guard::extract(*pdf);
        body = doc.full_text();
        auto report = scanner_.scan(doc);
        if (extra && !report.flagged) {
            auto letter = scanner_.scan_text(*extra);
            if (letter.flagged) return letter;
        }
        return report;
    }
    std::string all = body;
    if (extra) all += "\n\n" + *extra;
    return scanner_.scan_text(all);
}

SubmitResult Platform::submit(SubmitRequest request) {
    if (request.pdf && request.pdf->size() > config_.limits.max_body_bytes)
        throw Error(ErrorCode::kPayloadTooLarge, "document exceeds the size limit");
    if (request.body.size() > config_.limits.max_body_bytes)
        throw Error(ErrorCode::kPayloadTooLarge, "document exceeds the size limit");

    auto report = scan_document(request.pdf, request.body, std::nullopt);
    // The version body is the extracted text; the original bytes are kept as a blob.
    std::optional<std::string> blob;
    if (request.pdf) blob = store_->put_blob(*request.pdf);
    auto s = core::create_submission(ids_, clock_, request.kind, std::move(request.body),
                                     std::move(request.attribution), std::move(blob));

    std::optional<std::string> review_id;
    if (report.flagged) {
        core::transition(s, StatusEvent::kScanFailed);
    } else {
        core::transition(s, StatusEvent::kScanPassed);
        if (config_.review.auto_on_submit) {
            review_id = ids_.next();
            core::request_review(s, *review_id, config_.review.submit_mode);
        }
    }
    auto committed = store_->insert(std::move(s));
    if (review_id) enqueue_review(committed.id, *review_id, config_.review.submit_mode, config_.review.use_rag);
    const bool flagged = committed.status == Status::kQuarantined;
    return {std::move(committed), std::move(report), flagged};
}

core::ReviewRecord Platform::request_review(const std::string& id, const std::string& mode, bool use_rag, bool wait) {
    check_mode(mode);
    const auto review_id = ids_.next();
    store_->mutate(id, [&](core::Submission& s) {
        if (s.status != Status::kUnderReview && s.status != Status::kResubmitted) {
            throw Error(ErrorCode::kIllegalState,
                        fmt::format("cannot review submission {} in state {}", id, core::to_string(s.status)));
        }
        core::request_review(s, review_id, mode);
    });
    if (wait) {
        execute_review(id, review_id, mode, use_rag);
    } else {
        enqueue_review(id, review_id, mode, use_rag);
    }
    return get_review(id, review_id);
}

core::ReviewRecord Platform::get_review(const std::string& id, const std::string& review_id) const {
    const auto s = store_->get(id);
    const auto* r = s.find_review(review_id);
    if (!r) throw Error(ErrorCode::kNotFound, fmt::format("review {} not found on {}", review_id, id));
    return *r;
}

void Platform::enqueue_review(const std::string& id, const std::string& review_id, const std::string& mode,
                              bool use_rag) {
    const bool queued = jobs_.try_push([this, id, review_id, mode, use_rag] {
        execute_review(id, review_id, mode, use_rag);
    });
    if (!queued) {
        store_->mutate(id, [&](core::Submission& s) { core::fail_review(s, review_id, "job queue is full"); });
    }
}

void Platform::execute_review(const std::string& id, const std::string& review_id, const std::string& mode,
                              bool use_rag) {
    json report;
    int reviewed_version = 1;
    try {
        const auto s = store_->get(id);
        const auto* record = s.find_review(review_id);
        if (!record) throw Error(ErrorCode::kNotFound, "review " + review_id + " vanished");
        reviewed_version = record->version;
        const auto& version = s.version(reviewed_version);
        const std::string document =
            version.version > 1 ? pairwise::assemble_revised_document(version, true, {}) : version.body;

        if (mode == "single") {
            report = reviewer_.review_single(document, s.kind, config_.models.reviewer, use_rag);
        } else {
            const meta::MetaModels models{config_.models.planner, config_.models.sub_reviewers,
                                          config_.models.summarizer};
            report = meta_.run(document, standard(s.kind), models, use_rag);
        }
    } catch (const std::exception& e) {
        store_->mutate(id, [&](core::Submission& s) { core::fail_review(s, review_id, e.what()); });
        return;
    }
    store_->mutate(id, [&](core::Submission& s) {
        core::complete_review(s, review_id, std::move(report));
        // A review of an outdated version does not move the current one.
        if (reviewed_version == s.latest().version && core::next_state(s.status, StatusEvent::kReviewComplete))
            core::transition(s, StatusEvent::kReviewComplete);
    });
}

RevisionResult Platform::revise(const std::string& id, RevisionRequest request) {
    if (request.pdf && request.pdf->size() > config_.limits.max_body_bytes)
        throw Error(ErrorCode::kPayloadTooLarge, "document exceeds the size limit");
    if (request.body.size() > config_.limits.max_body_bytes)
        throw Error(ErrorCode::kPayloadTooLarge, "document exceeds the size limit");
    if (!store_->contains(id)) throw Error(ErrorCode::kNotFound, "submission " + id + " not found");

    auto report = scan_document(request.pdf, request.body, request.response_letter);
    std::optional<std::string> blob;
    if (request.pdf) blob = store_->put_blob(*request.pdf);

    const bool auto_review = !report.flagged && config_.review.auto_on_resubmit;
    const std::string review_id = auto_review ? ids_.next() : std::string();
    auto committed = store_->mutate(id, [&](core::Submission& s) {
        if (s.status != Status::kRevisionRequested) {
            throw Error(ErrorCode::kIllegalState,
                        fmt::format("cannot revise submission {} in state {}", id, core::to_string(s.status)));
        }
        core::add_revision(s, clock_, request.body, request.response_letter, blob);
        if (report.flagged) {
            core::transition(s, StatusEvent::kScanFailed);
        } else if (auto_review) {
            core::request_review(s, review_id, config_.review.resubmit_mode);
        }
    });

    RevisionResult result{committed, std::move(report), committed.status == Status::kQuarantined, std::nullopt};
    if (auto_review) {
        enqueue_review(id, review_id, config_.review.resubmit_mode, config_.review.use_rag);
        result.review_id = review_id;
    }
    return result;
}

void Platform::check_decidable(const core::Submission& s) const {
    if (s.status != Status::kUnderReview && s.status != Status::kRevisionRequested &&
        s.status != Status::kResubmitted) {
        throw Error(ErrorCode::kIllegalState,
                    fmt::format("cannot decide submission {} in state {}", s.id, core::to_string(s.status)));
    }
}

voting::RevisionContext Platform::revision_context(const core::Submission& s) const {
    voting::RevisionContext ctx;
    const int latest = s.latest().version;
    if (latest == 1) return ctx;
    for (const auto& r : s.reviews) {
        if (r.state == "done" && r.version < latest) ctx.prior_reviews.push_back(r.report.dump(2));
    }
    ctx.response_letter = s.latest().response_letter;
    return ctx;
}

voting::PanelOutcome Platform::run_decision(const std::string& id, bool use_rag) {
    const auto s = store_->get(id);
    check_decidable(s);
    const auto outcome = panel_.run_panel(s.latest().body, s.kind, llm::ModelPanel(config_.panel), use_rag,
                                          revision_context(s));
    store_->mutate(id, [&](core::Submission& live) {
        core::record_panel(live, json(outcome));
        core::transition(live, outcome.accepted ? StatusEvent::kVoteAccept : StatusEvent::kVoteReject);
        if (outcome.accepted) core::assign_doi(live);
    });
    return outcome;
}

voting::PanelOutcome Platform::decide(const std::string& id, bool use_rag) {
    {
        std::lock_guard lock(decisions_mutex_);
        if (!deciding_.insert(id).second)
            throw Error(ErrorCode::kIllegalState, "a decision is already running for " + id);
    }
    try {
        auto outcome = run_decision(id, use_rag);
        std::lock_guard lock(decisions_mutex_);
        deciding_.erase(id);
        decisions_[id] = DecisionJob{"done", json(outcome), ""};
        return outcome;
    } catch (...) {
        std::lock_guard lock(decisions_mutex_);
        deciding_.erase(id);
        throw;
    }
}

DecisionJob Platform::decide_async(const std::string& id, bool use_rag) {
    check_decidable(store_->get(id));
    {
        std::lock_guard lock(decisions_mutex_);
        if (!deciding_.insert(id).second)
            throw Error(ErrorCode::kIllegalState, "a decision is already running for " + id);
        decisions_[id] = DecisionJob{"pending", nullptr, ""};
    }
    const bool queued = jobs_.try_push([this, id, use_rag] {
        DecisionJob done;
        try {
            done = DecisionJob{"done", json(run_decision(id, use_rag)), ""};
        } catch (const std::exception& e) {
            done = DecisionJob{"failed", nullptr, e.what()};
        }
        std::lock_guard lock(decisions_mutex_);
        deciding_.erase(id);
        decisions_[id] = std::move(done);
    });
    std::lock_guard lock(decisions_mutex_);
    if (!queued) {
        deciding_.erase(id);
        decisions_.erase(id);
        throw Error(ErrorCode::kRateLimited, "job queue is full");
    }
    return decisions_[id];
}

std::optional<DecisionJob> Platform::decision_status(const std::string& id) const {
    if (!store_->contains(id)) throw Error(ErrorCode::kNotFound, "submission " + id + " not found");
    std::lock_guard lock(decisions_mutex_);
    const auto it = decisions_.find(id);
    if (it == decisions_.end()) return std::nullopt;
    return it->second;
}

voting::UpgradeProgress Platform::add_external_review(const std::string& id, core::ExternalReview review) {
    if (review.agent_id.empty()) throw Error(ErrorCode::kInvalidArgument, "agent_id must be non-empty");
    voting::UpgradeProgress progress;
    store_->mutate(id, [&](core::Submission& s) { progress = voting::record_external_review(s, review); });
    return progress;
}

std::int64_t Platform::like(const std::string& id) {
    return store_->mutate(id, [](core::Submission& s) { core::add_like(s); }).likes;
}

core::Submission Platform::comment(const std::string& id, std::string author, std::string body) {
    if (author.empty()) author = "anonymous";
    return store_->mutate(id, [&](core::Submission& s) { core::add_comment(s, clock_, author, body); });
}

FeedPage Platform::feed(int page) const {
    if (page < 1) throw Error(ErrorCode::kInvalidArgument, fmt::format("page must be >= 1, got {}", page));
    FeedPage out;
    out.page = page;
    out.page_size = config_.limits.feed_page_size;

    std::vector<core::Submission> visible;
    for (auto& s : store_->list_newest_first()) {
        if (s.status != Status::kQuarantined) visible.push_back(std::move(s));
    }
    out.total = visible.size();
    const auto size = static_cast<std::size_t>(out.page_size);
    out.pages = static_cast<int>((out.total + size - 1) / size);

    const std::size_t begin = static_cast<std::size_t>(page - 1) * size;
    for (std::size_t i = begin; i < std::min(out.total, begin + size); ++i) {
        const auto& s = visible[i];
        out.items.push_back(FeedItem{s.id, s.kind, title_of(s.latest().body), s.status, s.latest().version, s.likes,
                                     s.comments.size(), s.doi, s.created_at});
    }
    return out;
}

}  // namespace peerloop::service
