#include "peerloop/llm/schemas.hpp"

namespace peerloop::llm::schemas {

namespace {

Schema string_list() { return Schema::array(Schema::string()); }

Schema dimension_feedback() {
    return Schema::object({
        {"strengths", string_list()},
        {"weaknesses", string_list()},
        {"suggestions", string_list()},
    });
}

}  // namespace

const std::vector<std::string>& proposal_dimensions() {
    static const std::vector<std::string> k{"methodological_quality", "novelty_significance", "clarity_organization",
                                            "feasibility_planning"};
    return k;
}

const std::vector<std::string>& paper_dimensions() {
    static const std::vector<std::string> k{"clarity", "originality_novelty", "quality_soundness",
                                            "significance_impact"};
    return k;
}

const std::vector<std::string>& proposal_vote_scores() {
    static const std::vector<std::string> k{"novelty", "soundness", "impact", "clarity", "feasibility"};
    return k;
}

const std::vector<std::string>& paper_vote_scores() {
    static const std::vector<std::string> k{"clarity", "originality", "quality_soundness", "significance_impact",
                                            "rating"};
    return k;
}

const std::vector<std::string>& meta_criteria() {
    static const std::vector<std::string> k{"soundness", "presentation", "contribution"};
    return k;
}

Schema review_schema(const std::vector<std::string>& dimensions) {
    std::vector<Schema::Field> fields;
    for (const auto& d : dimensions) fields.push_back({d, dimension_feedback()});
    fields.push_back({"summary", Schema::string(true)});
    fields.push_back({"major_concerns", string_list()});
    fields.push_back({"minor_issues", string_list()});
    fields.push_back({"questions_for_authors", string_list()});
    fields.push_back({"improvement_recommendations", string_list()});
    return Schema::object(std::move(fields));
}

Schema meta_review_schema() {
    return Schema::object({
        {"summary", Schema::string(true)},
        {"decision", Schema::string_enum({"accept", "reject"})},
        {"justification", Schema::string(true)},
        {"criteria", Schema::map(Schema::integer(0, 4), 3, meta_criteria())},
        {"rating", Schema::integer(1, 10)},
    });
}

Schema pairwise_schema() {
    return Schema::one_of({
        Schema::object({{"betterproposal", Schema::string_enum({"Proposal1", "Proposal2"})}}),
        Schema::object({{"betterpaper", Schema::string_enum({"Paper1", "Paper2"})}}),
    });
}

Schema vote_schema(const std::vector<std::string>& score_keys, bool integer_scores) {
    std::vector<Schema::Field> scores;
    for (const auto& k : score_keys)
        scores.push_back({k, integer_scores ? Schema::integer(0, 10) : Schema::number(0, 10)});
    return Schema::object({
        {"decision", Schema::string_enum({"accept", "reject"})},
        {"confidence", Schema::number(0.0, 1.0)},
        {"reasons", string_list()},
        {"scores", Schema::object(std::move(scores))},
        {"meta", Schema::object({{"used_lit_search", Schema::boolean()}})},
    });
}

Schema planner_schema() {
    return Schema::object({
        {"topics", string_list(), false},
        {"reviewers", Schema::array(Schema::object({
                          {"role", Schema::string(true)},
                          {"expertise", Schema::string(true)},
                          {"instructions", Schema::string(true)},
                      }))},
    });
}

Schema injection_check_schema() {
    return Schema::object({
        {"verdict", Schema::string_enum({"manipulative", "benign"})},
        {"rationale", Schema::string(), false},
    });
}

Schema sub_review_schema(const std::vector<std::string>& criteria, int score_min, int score_max) {
    return Schema::object({
        {"reviewer_role", Schema::string(), false},
        {"criteria", Schema::map(Schema::object({
                                     {"score", Schema::integer(score_min, score_max)},
                                     {"comment", Schema::string()},
                                 }),
                                 1, criteria)},
        {"notes", Schema::string(), false},
    });
}

void register_builtin(SchemaRegistry& registry) {
    registry.add(std::string(kReviewProposal), review_schema(proposal_dimensions()));
    registry.add(std::string(kReviewPaper), review_schema(paper_dimensions()));
    registry.add(std::string(kMetaReview), meta_review_schema());
    registry.add(std::string(kPairwise), pairwise_schema());
    registry.add(std::string(kVoteProposal), vote_schema(proposal_vote_scores(), false));
    registry.add(std::string(kVotePaper), vote_schema(paper_vote_scores(), true));
    registry.add(std::string(kPlanner), planner_schema());
    registry.add(std::string(kInjectionCheck), injection_check_schema());
}

}  // namespace peerloop::llm::schemas
