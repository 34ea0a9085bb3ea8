#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "peerloop/core/types.hpp"
#include "peerloop/lit/retrieval.hpp"
#include "peerloop/llm/gateway.hpp"
#include "peerloop/llm/prompt.hpp"

namespace peerloop::review {

struct DimensionFeedback {
    std::vector<std::string> strengths;
    std::vector<std::string> weaknesses;
    std::vector<std::string> suggestions;

    bool operator==(const DimensionFeedback&) const = default;
};

struct Provenance {
    bool rag_requested = false;
    std::size_t literature_sources = 0;
    std::string rag_error;  // set when retrieval failed and the review went ahead without it
    std::string prompt_hash;

    bool operator==(const Provenance&) const = default;
};

struct ReviewReport {
    core::Kind kind = core::Kind::kProposal;
    std::string reviewer_model;
    std::map<std::string, DimensionFeedback> dimensions;
    std::string summary;
    std::vector<std::string> major_concerns;
    std::vector<std::string> minor_issues;
    std::vector<std::string> questions_for_authors;
    std::vector<std::string> improvement_recommendations;
    Provenance provenance;

    bool operator==(const ReviewReport&) const = default;
};

const std::vector<std::string>& dimensions_for(core::Kind kind);
std::string_view review_schema_id(core::Kind kind);

/// Builds a report from a model reply. Throws kSchemaViolation when the
/// reply does not match the kind's schema or carries any numeric field.
ReviewReport parse_review(const nlohmann::json& reply, core::Kind kind, std::string reviewer_model);

void to_json(nlohmann::json& j, const ReviewReport& r);
void from_json(const nlohmann::json& j, ReviewReport& r);

struct ReviewConfig {
    std::size_t proposal_budget = 3000;
    std::size_t paper_budget = 8000;
    std::size_t literature_budget = 5000;
    std::size_t literature_k = 5;
    bool rag_degrade = true;
};

/// Single-agent, revision-oriented review.
class ReviewEngine {
public:
    ReviewEngine(llm::Gateway& gateway, lit::SearchClient* search, const llm::PromptLibrary& prompts,
                 ReviewConfig config = {});

    ReviewReport review_single(std::string_view body, core::Kind kind, const std::string& model_id, bool use_rag);

    /// The chat request review_single would send, for inspection and fixtures.
    llm::ChatRequest build_request(std::string_view body, core::Kind kind, const std::string& model_id,
                                   const lit::LiteratureResult& literature) const;

    const ReviewConfig& config() const { return config_; }

private:
    llm::Gateway& gateway_;
    lit::SearchClient* search_;
    const llm::PromptLibrary& prompts_;
    ReviewConfig config_;
};

/// Prior body, the review as text and optionally an empty response-letter
/// section, in that fixed order.
std::string build_revision_packet(const ReviewReport& report, std::string_view prior_body,
                                  bool include_response_letter_slot);

inline constexpr std::string_view kResponseLetterHeader = "# Response Letter";

}  // namespace peerloop::review
