#include "peerloop/review/single.hpp"

#include <fmt/format.h>

#include "peerloop/common/error.hpp"
#include "peerloop/common/text.hpp"
#include "peerloop/llm/budget.hpp"
#include "peerloop/llm/schemas.hpp"

namespace peerloop::review {

using nlohmann::json;

const std::vector<std::string>& dimensions_for(core::Kind kind) {
    return kind == core::Kind::kProposal ? llm::schemas::proposal_dimensions() : llm::schemas::paper_dimensions();
}

std::string_view review_schema_id(core::Kind kind) {
    return kind == core::Kind::kProposal ? llm::schemas::kReviewProposal : llm::schemas::kReviewPaper;
}

namespace {

bool has_number(const json& j) {
    if (j.is_number()) return true;
    if (j.is_structured())
        for (const auto& v : j)
            if (has_number(v)) return true;
    return false;
}

const char* const kLists[] = {"major_concerns", "minor_issues", "questions_for_authors",
                              "improvement_recommendations"};

std::vector<std::string>& list_field(ReviewReport& r, std::string_view name) {
    if (name == "major_concerns") return r.major_concerns;
    if (name == "minor_issues") return r.minor_issues;
    if (name == "questions_for_authors") return r.questions_for_authors;
    return r.improvement_recommendations;
}

const std::vector<std::string>& list_field(const ReviewReport& r, std::string_view name) {
    return list_field(const_cast<ReviewReport&>(r), name);
}

}  // namespace

ReviewReport parse_review(const json& reply, core::Kind kind, std::string reviewer_model) {
    const auto schema = kind == core::Kind::kProposal ? llm::schemas::review_schema(llm::schemas::proposal_dimensions())
                                                      : llm::schemas::review_schema(llm::schemas::paper_dimensions());
    auto errors = schema.validate(reply);
    if (has_number(reply)) errors.push_back("$: numeric fields are not allowed in a feedback-only review");
    if (!errors.empty())
        throw Error(ErrorCode::kSchemaViolation, fmt::format("review reply rejected: {}", fmt::join(errors, "; ")));

    ReviewReport r;
    r.kind = kind;
    r.reviewer_model = std::move(reviewer_model);
    for (const auto& d : dimensions_for(kind)) {
        const auto& dj = reply.at(d);
        r.dimensions[d] = DimensionFeedback{dj.at("strengths").get<std::vector<std::string>>(),
                                            dj.at("weaknesses").get<std::vector<std::string>>(),
                                            dj.at("suggestions").get<std::vector<std::string>>()};
    }
    r.summary = reply.at("summary").get<std::string>();
    for (const char* name : kLists) list_field(r, name) = reply.at(name).get<std::vector<std::string>>();
    return r;
}

void to_json(json& j, const ReviewReport& r) {
    j = json::object();
    j["kind"] = core::to_string(r.kind);
    j["reviewer_model"] = r.reviewer_model;
    for (const auto& [name, d] : r.dimensions)
        j["dimensions"][name] = {{"strengths", d.strengths}, {"weaknesses", d.weaknesses}, {"suggestions", d.suggestions}};
    j["summary"] = r.summary;
    for (const char* name : kLists) j[name] = list_field(r, name);
    j["provenance"] = {{"rag_requested", r.provenance.rag_requested},
                       {"literature_sources", r.provenance.literature_sources},
                       {"prompt_hash", r.provenance.prompt_hash}};
    if (!r.provenance.rag_error.empty()) j["provenance"]["rag_error"] = r.provenance.rag_error;
}

void from_json(const json& j, ReviewReport& r) {
    r = ReviewReport{};
    r.kind = core::kind_from_string(j.at("kind").get<std::string>());
    r.reviewer_model = j.value("reviewer_model", "");
    for (const auto& [name, d] : j.at("dimensions").items())
        r.dimensions[name] = DimensionFeedback{d.at("strengths").get<std::vector<std::string>>(),
                                               d.at("weaknesses").get<std::vector<std::string>>(),
                                               d.at("suggestions").get<std::vector<std::string>>()};
    r.summary = j.at("summary").get<std::string>();
    for (const char* name : kLists) list_field(r, name) = j.value(name, std::vector<std::string>{});
    if (j.contains("provenance")) {
        const auto& p = j["provenance"];
        r.provenance.rag_requested = p.value("rag_requested", false);
        r.provenance.literature_sources = p.value("literature_sources", std::size_t{0});
        r.provenance.rag_error = p.value("rag_error", "");
        r.provenance.prompt_hash = p.value("prompt_hash", "");
    }
}

ReviewEngine::ReviewEngine(llm::Gateway& gateway, lit::SearchClient* search, const llm::PromptLibrary& prompts,
                           ReviewConfig config)
    : gateway_(gateway), search_(search), prompts_(prompts), config_(config) {}

llm::ChatRequest ReviewEngine::build_request(std::string_view body, core::Kind kind, const std::string& model_id,
                                             const lit::LiteratureResult& literature) const {
    const bool proposal = kind == core::Kind::kProposal;
    const auto budget = llm::TokenBudget(proposal ? config_.proposal_budget : config_.paper_budget);
    std::string related;
    if (literature.block.source_count > 0) related = "Related Literature:\n" + literature.block.text;

    llm::TemplateVars vars{{"related_literature", related}};
    vars[proposal ? "proposal_text" : "paper_text"] = llm::truncate_to_budget(body, budget);

    llm::ChatRequest req;
    req.model_id = model_id;
    req.messages.push_back({llm::Role::kUser, prompts_.render(proposal ? "review_proposal" : "review_paper", vars)});
    return req;
}

ReviewReport ReviewEngine::review_single(std::string_view body, core::Kind kind, const std::string& model_id,
                                         bool use_rag) {
    if (text::trim(body).empty()) throw Error(ErrorCode::kEmptyBody, "cannot review an empty document");
    lit::LiteratureResult literature;
    if (use_rag)
        literature = lit::gather_literature(search_, body, config_.literature_k,
                                            llm::TokenBudget(config_.literature_budget), config_.rag_degrade);

    const auto req = build_request(body, kind, model_id, literature);
    auto reply = gateway_.complete_structured(req, review_schema_id(kind));
    auto report = parse_review(reply, kind, model_id);
    report.provenance.rag_requested = use_rag;
    report.provenance.literature_sources = literature.block.source_count;
    report.provenance.rag_error = literature.error;
    report.provenance.prompt_hash = llm::prompt_hash(req);
    return report;
}

namespace {

void bullet_list(std::string& out, std::string_view title, const std::vector<std::string>& items) {
    out += fmt::format("{}:\n", title);
    if (items.empty()) out += "- (none)\n";
    for (const auto& i : items) out += fmt::format("- {}\n", i);
}

}  // namespace

std::string build_revision_packet(const ReviewReport& report, std::string_view prior_body,
                                  bool include_response_letter_slot) {
    std::string out = "# Prior Version\n\n";
    out += prior_body;
    if (out.back() != '\n') out += '\n';
    out += "\n# Review Feedback\n";
    for (const auto& name : dimensions_for(report.kind)) {
        auto it = report.dimensions.find(name);
        if (it == report.dimensions.end()) continue;
        out += fmt::format("\n## {}\n", name);
        bullet_list(out, "Strengths", it->second.strengths);
        bullet_list(out, "Weaknesses", it->second.weaknesses);
        bullet_list(out, "Suggestions", it->second.suggestions);
    }
    out += fmt::format("\n## Summary\n{}\n\n", report.summary);
    bullet_list(out, "Major concerns", report.major_concerns);
    bullet_list(out, "Minor issues", report.minor_issues);
    bullet_list(out, "Questions for authors", report.questions_for_authors);
    bullet_list(out, "Improvement recommendations", report.improvement_recommendations);
    if (include_response_letter_slot) {
        out += fmt::format("\n{}\n\n", kResponseLetterHeader);
        out += "For each concern above, state the change made in the revision or why none was needed.\n\n";
        out += "(to be completed by the authors)\n";
    }
    return out;
}

}  // namespace peerloop::review
