#include "peerloop/meta/standard.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "peerloop/common/assets.hpp"
#include "peerloop/common/error.hpp"

namespace peerloop::meta {

std::vector<std::string> ReviewStandard::criterion_names() const {
    std::vector<std::string> out;
    for (const auto& c : criteria) out.push_back(c.name);
    return out;
}

std::string ReviewStandard::sub_review_schema_id() const { return fmt::format("sub-review/{}/v{}", name, version); }

namespace {

void read_range(const YAML::Node& node, int& lo, int& hi) {
    if (!node) return;
    lo = node["min"].as<int>(lo);
    hi = node["max"].as<int>(hi);
}

}  // namespace

ReviewStandard parse_standard(std::string_view yaml) {
    ReviewStandard s;
    s.source = std::string(yaml);
    try {
        const YAML::Node root = YAML::Load(s.source);
        s.name = root["name"].as<std::string>();
        s.version = root["version"].as<int>(1);
        s.kind = core::kind_from_string(root["kind"].as<std::string>());
        s.default_reviewer_count = root["default_reviewer_count"].as<int>(s.default_reviewer_count);
        read_range(root["reviewer_count"], s.min_reviewers, s.max_reviewers);
        read_range(root["score_scale"], s.score_min, s.score_max);
        read_range(root["rating_scale"], s.rating_min, s.rating_max);
        for (const auto& c : root["criteria"])
            s.criteria.push_back({c["name"].as<std::string>(), c["description"].as<std::string>("")});
    } catch (const YAML::Exception& e) {
        throw Error(ErrorCode::kConfig, fmt::format("invalid review standard: {}", e.what()));
    }

    if (s.name.empty()) throw Error(ErrorCode::kConfig, "review standard needs a name");
    if (s.criteria.empty()) throw Error(ErrorCode::kConfig, "review standard needs at least one criterion");
    std::set<std::string> seen;
    for (const auto& c : s.criteria)
        if (c.name.empty() || !seen.insert(c.name).second)
            throw Error(ErrorCode::kConfig, fmt::format("bad or duplicate criterion '{}'", c.name));
    if (s.min_reviewers < 1 || s.min_reviewers > s.max_reviewers)
        throw Error(ErrorCode::kConfig, "reviewer_count range is empty");
    if (s.default_reviewer_count < std::max(s.min_reviewers, kSoftMinReviewers) ||
        s.default_reviewer_count > std::min(s.max_reviewers, kSoftMaxReviewers))
        throw Error(ErrorCode::kConfig,
                    fmt::format("default_reviewer_count {} outside [{}, {}]", s.default_reviewer_count,
                                std::max(s.min_reviewers, kSoftMinReviewers),
                                std::min(s.max_reviewers, kSoftMaxReviewers)));
    return s;
}

ReviewStandard load_standard(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorCode::kConfig, "cannot read review standard " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_standard(ss.str());
}

ReviewStandard builtin_standard(core::Kind kind) {
    return parse_standard(
        assets::get(kind == core::Kind::kProposal ? "standards/proposal.yaml" : "standards/paper.yaml"));
}

}  // namespace peerloop::meta
