#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "peerloop/lit/retrieval.hpp"
#include "peerloop/llm/gateway.hpp"
#include "peerloop/llm/prompt.hpp"
#include "peerloop/meta/standard.hpp"

namespace peerloop::meta {

struct ReviewerSpec {
    std::string role;
    std::string expertise;
    std::string instructions;

    bool operator==(const ReviewerSpec&) const = default;
};

struct CriterionScore {
    int score = 0;
    std::string comment;

    bool operator==(const CriterionScore&) const = default;
};

struct SubReview {
    std::string reviewer_role;
    std::string model_id;
    std::map<std::string, CriterionScore> criteria;
    std::string notes;

    bool operator==(const SubReview&) const = default;
};

enum class Decision { kAccept, kReject };

struct MetaReviewReport {
    std::string summary;
    Decision decision = Decision::kReject;
    std::string justification;
    std::map<std::string, int> criteria_scores;
    int rating = 1;

    bool operator==(const MetaReviewReport&) const = default;
};

struct SubReviewBatch {
    std::vector<SubReview> reviews;
    std::vector<std::string> dropped;  // one error line per failed reviewer
    lit::LiteratureResult literature;
};

struct MetaOutcome {
    std::vector<ReviewerSpec> specs;
    SubReviewBatch batch;
    MetaReviewReport report;
};

struct MetaModels {
    std::string planner;
    std::vector<std::string> reviewers;  // assigned round-robin to the planned specs
    std::string summarizer;
};

struct MetaConfig {
    std::size_t planner_budget = 3000;
    std::size_t submission_budget = 8000;
    std::size_t literature_budget = 5000;
    std::size_t reviews_budget = 8000;
    std::size_t literature_k = 5;
    std::size_t min_successful = 2;
    bool rag_degrade = true;
};

inline constexpr std::string_view kGeneralistRole = "Generalist Reviewer";

void to_json(nlohmann::json& j, const ReviewerSpec& s);
void from_json(const nlohmann::json& j, ReviewerSpec& s);
void to_json(nlohmann::json& j, const SubReview& r);
void from_json(const nlohmann::json& j, SubReview& r);
void to_json(nlohmann::json& j, const MetaReviewReport& r);
void from_json(const nlohmann::json& j, MetaReviewReport& r);
void to_json(nlohmann::json& j, const MetaOutcome& o);

/// Pads with generalist reviewers or truncates so the count lands in
/// [standard.min_reviewers, standard.max_reviewers].
std::vector<ReviewerSpec> clamp_reviewers(std::vector<ReviewerSpec> specs, const ReviewStandard& standard);

/// Planner, concurrent domain reviewers and a summarizer.
class MetaReviewer {
public:
    MetaReviewer(llm::Gateway& gateway, lit::SearchClient* search, const llm::PromptLibrary& prompts,
                 MetaConfig config = {});

    std::vector<ReviewerSpec> plan_reviewers(std::string_view body, const ReviewStandard& standard,
                                             const std::string& model_id);

    /// Throws kTooFewReviews when fewer than config.min_successful reviewers succeed.
    SubReviewBatch run_sub_reviews(const std::vector<ReviewerSpec>& specs, std::string_view body,
                                   const ReviewStandard& standard, const std::vector<std::string>& model_ids,
                                   bool use_rag);

    /// Decision and rating are taken from the model as-is.
    MetaReviewReport summarize(const std::vector<SubReview>& reviews, const ReviewStandard& standard,
                               const std::string& model_id);

    MetaOutcome run(std::string_view body, const ReviewStandard& standard, const MetaModels& models, bool use_rag);

    const MetaConfig& config() const { return config_; }

private:
    void ensure_sub_review_schema(const ReviewStandard& standard);

    llm::Gateway& gateway_;
    lit::SearchClient* search_;
    const llm::PromptLibrary& prompts_;
    MetaConfig config_;
};

}  // namespace peerloop::meta
