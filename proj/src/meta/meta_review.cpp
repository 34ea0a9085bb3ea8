#include "peerloop/meta/meta_review.hpp"

#include <algorithm>
#include <future>

#include <fmt/format.h>

#include "peerloop/common/error.hpp"
#include "peerloop/common/text.hpp"
#include "peerloop/llm/budget.hpp"
#include "peerloop/llm/schemas.hpp"

namespace peerloop::meta {

using nlohmann::json;

void to_json(json& j, const ReviewerSpec& s) {
    j = json{{"role", s.role}, {"expertise", s.expertise}, {"instructions", s.instructions}};
}

void from_json(const json& j, ReviewerSpec& s) {
    s.role = j.at("role").get<std::string>();
    s.expertise = j.at("expertise").get<std::string>();
    s.instructions = j.at("instructions").get<std::string>();
}

void to_json(json& j, const SubReview& r) {
    j = json{{"reviewer_role", r.reviewer_role}, {"model_id", r.model_id}, {"notes", r.notes}};
    j["criteria"] = json::object();
    for (const auto& [name, c] : r.criteria) j["criteria"][name] = {{"score", c.score}, {"comment", c.comment}};
}

void from_json(const json& j, SubReview& r) {
    r.reviewer_role = j.value("reviewer_role", "");
    r.model_id = j.value("model_id", "");
    r.notes = j.value("notes", "");
    r.criteria.clear();
    for (const auto& [name, c] : j.at("criteria").items())
        r.criteria[name] = CriterionScore{c.at("score").get<int>(), c.at("comment").get<std::string>()};
}

void to_json(json& j, const MetaReviewReport& r) {
    j = json{{"summary", r.summary},
             {"decision", r.decision == Decision::kAccept ? "accept" : "reject"},
             {"justification", r.justification},
             {"criteria", r.criteria_scores},
             {"rating", r.rating}};
}

void from_json(const json& j, MetaReviewReport& r) {
    r.summary = j.at("summary").get<std::string>();
    r.decision = j.at("decision").get<std::string>() == "accept" ? Decision::kAccept : Decision::kReject;
    r.justification = j.at("justification").get<std::string>();
    r.criteria_scores = j.at("criteria").get<std::map<std::string, int>>();
    r.rating = j.at("rating").get<int>();
}

void to_json(json& j, const MetaOutcome& o) {
    j = json{{"mode", "meta"},
             {"specs", o.specs},
             {"sub_reviews", o.batch.reviews},
             {"dropped", o.batch.dropped},
             {"literature", o.batch.literature},
             {"report", o.report}};
}

std::vector<ReviewerSpec> clamp_reviewers(std::vector<ReviewerSpec> specs, const ReviewStandard& standard) {
    const auto hi = static_cast<std::size_t>(standard.max_reviewers);
    const auto lo = static_cast<std::size_t>(standard.min_reviewers);
    if (specs.size() > hi) specs.resize(hi);
    std::vector<std::string> names = standard.criterion_names();
    while (specs.size() < lo) {
        specs.push_back(ReviewerSpec{
            std::string(kGeneralistRole), "broad familiarity with the submission's field",
            fmt::format("Assess the submission against every criterion of the standard ({}), citing concrete "
                        "passages for each score.",
                        fmt::join(names, ", "))});
    }
    return specs;
}

MetaReviewer::MetaReviewer(llm::Gateway& gateway, lit::SearchClient* search, const llm::PromptLibrary& prompts,
                           MetaConfig config)
    : gateway_(gateway), search_(search), prompts_(prompts), config_(config) {}

namespace {

std::string mode_name(core::Kind kind) { return kind == core::Kind::kProposal ? "proposal" : "paper"; }

llm::ChatRequest user_request(const std::string& model_id, std::string prompt) {
    llm::ChatRequest req;
    req.model_id = model_id;
    req.messages.push_back({llm::Role::kUser, std::move(prompt)});
    return req;
}

}  // namespace

std::vector<ReviewerSpec> MetaReviewer::plan_reviewers(std::string_view body, const ReviewStandard& standard,
                                                       const std::string& model_id) {
    if (text::trim(body).empty()) throw Error(ErrorCode::kEmptyBody, "cannot plan reviewers for an empty document");
    const auto prompt =
        prompts_.render("planner", {{"review_mode", mode_name(standard.kind)},
                                    {"submission", llm::truncate_to_budget(body, llm::TokenBudget(config_.planner_budget))},
                                    {"standard", standard.source}});
    const auto reply = gateway_.complete_structured(user_request(model_id, prompt), llm::schemas::kPlanner);
    return clamp_reviewers(reply.at("reviewers").get<std::vector<ReviewerSpec>>(), standard);
}

void MetaReviewer::ensure_sub_review_schema(const ReviewStandard& standard) {
    const auto id = standard.sub_review_schema_id();
    if (!gateway_.schemas().contains(id))
        gateway_.schemas().add(id, llm::schemas::sub_review_schema(standard.criterion_names(), standard.score_min,
                                                                   standard.score_max));
}

SubReviewBatch MetaReviewer::run_sub_reviews(const std::vector<ReviewerSpec>& specs, std::string_view body,
                                             const ReviewStandard& standard,
                                             const std::vector<std::string>& model_ids, bool use_rag) {
    if (specs.empty()) throw Error(ErrorCode::kInvalidArgument, "no reviewer specs");
    if (model_ids.empty()) throw Error(ErrorCode::kInvalidArgument, "no reviewer models");
    ensure_sub_review_schema(standard);

    SubReviewBatch batch;
    if (use_rag)
        batch.literature = lit::gather_literature(search_, body, config_.literature_k,
                                                  llm::TokenBudget(config_.literature_budget), config_.rag_degrade);

    std::string skeleton;
    for (std::size_t i = 0; i < standard.criteria.size(); ++i)
        skeleton += fmt::format("        \"{}\": {{\"score\": <{}-{}>, \"comment\": \"<justification>\"}}{}\n",
                                standard.criteria[i].name, standard.score_min, standard.score_max,
                                i + 1 < standard.criteria.size() ? "," : "");
    if (!skeleton.empty()) skeleton.pop_back();

    const std::string submission = llm::truncate_to_budget(body, llm::TokenBudget(config_.submission_budget));
    const std::string related =
        batch.literature.block.source_count ? batch.literature.block.text : std::string("(none)");

    std::vector<std::future<SubReview>> futures;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& spec = specs[i];
        const auto& model = model_ids[i % model_ids.size()];
        auto prompt = prompts_.render("sub_reviewer", {{"role", spec.role},
                                                       {"expertise", spec.expertise},
                                                       {"instructions", spec.instructions},
                                                       {"review_mode", mode_name(standard.kind)},
                                                       {"submission", submission},
                                                       {"related_papers", related},
                                                       {"standard", standard.source},
                                                       {"criteria_skeleton", skeleton}});
        futures.push_back(std::async(std::launch::async, [this, &standard, spec, model, p = std::move(prompt)] {
            auto reply = gateway_.complete_structured(user_request(model, p), standard.sub_review_schema_id());
            SubReview r = reply.get<SubReview>();
            r.reviewer_role = spec.role;
            r.model_id = model;
            return r;
        }));
    }
    for (std::size_t i = 0; i < futures.size(); ++i) {
        try {
            batch.reviews.push_back(futures[i].get());
        } catch (const Error& e) {
            batch.dropped.push_back(fmt::format("{}: {}", specs[i].role, e.what()));
        }
    }
    if (batch.reviews.size() < config_.min_successful)
        throw Error(ErrorCode::kTooFewReviews,
                    fmt::format("only {} of {} sub-reviews succeeded (need {}): {}", batch.reviews.size(),
                                specs.size(), config_.min_successful, fmt::join(batch.dropped, " | ")));
    return batch;
}

MetaReviewReport MetaReviewer::summarize(const std::vector<SubReview>& reviews, const ReviewStandard& standard,
                                         const std::string& model_id) {
    if (reviews.size() < config_.min_successful)
        throw Error(ErrorCode::kTooFewReviews, fmt::format("summarize needs at least {} reviews", config_.min_successful));
    const std::string serialized = json(reviews).dump(2);
    const auto prompt = prompts_.render(
        "summarizer", {{"review_mode", mode_name(standard.kind)},
                       {"standard", standard.source},
                       {"reviews", llm::truncate_to_budget(serialized, llm::TokenBudget(config_.reviews_budget))}});
    return gateway_.complete_structured(user_request(model_id, prompt), llm::schemas::kMetaReview)
        .get<MetaReviewReport>();
}

MetaOutcome MetaReviewer::run(std::string_view body, const ReviewStandard& standard, const MetaModels& models,
                              bool use_rag) {
    MetaOutcome out;
    out.specs = plan_reviewers(body, standard, models.planner);
    out.batch = run_sub_reviews(out.specs, body, standard, models.reviewers, use_rag);
    out.report = summarize(out.batch.reviews, standard, models.summarizer);
    return out;
}

}  // namespace peerloop::meta
