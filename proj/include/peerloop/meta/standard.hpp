#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "peerloop/core/types.hpp"

namespace peerloop::meta {

struct Criterion {
    std::string name;
    std::string description;
};

/// Reviewing standard shared by the planner, sub-reviewers and summarizer.
struct ReviewStandard {
    std::string name;
    int version = 1;
    core::Kind kind = core::Kind::kProposal;
    int default_reviewer_count = 4;
    int min_reviewers = 2;
    int max_reviewers = 6;
    int score_min = 0;
    int score_max = 4;
    int rating_min = 1;
    int rating_max = 10;
    std::vector<Criterion> criteria;
    std::string source;  // YAML text as loaded, shown to the models

    std::vector<std::string> criterion_names() const;
    std::string sub_review_schema_id() const;
};

/// Soft range the default reviewer count must fall in.
inline constexpr int kSoftMinReviewers = 3;
inline constexpr int kSoftMaxReviewers = 5;

/// Throws Error(kConfig) when the document is malformed or inconsistent.
ReviewStandard parse_standard(std::string_view yaml);
ReviewStandard load_standard(const std::filesystem::path& file);
ReviewStandard builtin_standard(core::Kind kind);

}  // namespace peerloop::meta
