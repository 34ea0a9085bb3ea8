#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "peerloop/llm/schema.hpp"

namespace peerloop::llm::schemas {

inline constexpr std::string_view kReviewProposal = "review-proposal";
inline constexpr std::string_view kReviewPaper = "review-paper";
inline constexpr std::string_view kMetaReview = "meta-review";
inline constexpr std::string_view kPairwise = "pairwise";
inline constexpr std::string_view kVoteProposal = "vote-proposal";
inline constexpr std::string_view kVotePaper = "vote-paper";
inline constexpr std::string_view kPlanner = "planner";
inline constexpr std::string_view kInjectionCheck = "injection-check";

/// Names of the four feedback dimensions per submission kind.
const std::vector<std::string>& proposal_dimensions();
const std::vector<std::string>& paper_dimensions();

/// Score keys of a panel vote per submission kind.
const std::vector<std::string>& proposal_vote_scores();
const std::vector<std::string>& paper_vote_scores();

const std::vector<std::string>& meta_criteria();

Schema review_schema(const std::vector<std::string>& dimensions);
Schema meta_review_schema();
Schema pairwise_schema();
Schema vote_schema(const std::vector<std::string>& score_keys, bool integer_scores);
Schema planner_schema();
Schema injection_check_schema();
/// Sub-reviewer output; `criteria` must name every criterion of the standard.
Schema sub_review_schema(const std::vector<std::string>& criteria, int score_min = 0, int score_max = 4);

/// Registers the seven model-output schemas plus `injection-check`.
void register_builtin(SchemaRegistry& registry);

}  // namespace peerloop::llm::schemas
