#pragma once

#include <memory>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "peerloop/common/clock.hpp"
#include "peerloop/guard/lexicon.hpp"
#include "peerloop/llm/prompt.hpp"
#include "peerloop/service/api.hpp"
#include "peerloop/service/platform.hpp"
#include "support/stubs.hpp"

namespace peerloop::stubs {

/// Candidate passage of an injection-check prompt.
inline std::string check_passage(const llm::ChatRequest& r) {
    const std::string& t = r.messages.back().text;
    const auto start = t.find("Candidate passage:\n");
    const auto end = t.find("\n\nReply ONLY");
    if (start == std::string::npos || end == std::string::npos) return "";
    return t.substr(start + 19, end - start - 19);
}

struct LoopScript {
    std::set<std::string> accepting;  // panel models that vote accept
    int meta_rating = 7;
};

/// Answers every prompt the closed loop sends: reviews, planner, sub-reviewers,
/// summarizer, votes, injection checks and translations.
inline void install_loop_responder(llm::ScriptedBackend& backend, LoopScript script) {
    using nlohmann::json;
    backend.add_responder([script](const llm::ChatRequest& r) -> std::optional<std::string> {
        if (prompt_contains(r, "Candidate passage:")) {
            const auto p = check_passage(r);
            const bool bad = guard::looks_reviewer_directed(p) || !guard::lexicon_hits(p).empty();
            return bad ? R"({"verdict": "manipulative", "rationale": "addresses the reviewer"})"
                       : R"({"verdict": "benign", "rationale": "ordinary prose"})";
        }
        if (prompt_contains(r, "Reply with the translation only")) {
            const std::string& t = r.messages.back().text;
            return t.substr(t.find("Passage:\n") + 9);
        }
        if (prompt_contains(r, "Planner Agent")) {
            json reviewers = json::array();
            for (int i = 0; i < 3; ++i)
                reviewers.push_back({{"role", "Reviewer " + std::to_string(i)},
                                     {"expertise", "area " + std::to_string(i)},
                                     {"instructions", "check the method"}});
            return json{{"topics", {"method"}}, {"reviewers", reviewers}}.dump();
        }
        if (prompt_contains(r, "Summarizer Agent")) {
            return json{{"summary", "consistent reviews"},
                        {"decision", script.meta_rating >= 6 ? "accept" : "reject"},
                        {"justification", "sound revision"},
                        {"criteria", {{"soundness", 3}, {"presentation", 3}, {"contribution", 3}}},
                        {"rating", script.meta_rating}}
                .dump();
        }
        if (prompt_contains(r, "CONSTRAINTS:") && prompt_contains(r, "Expertise:")) {
            json c;
            for (auto k : {"soundness", "presentation", "contribution"}) c[k] = {{"score", 3}, {"comment", "fine"}};
            return json{{"criteria", c}, {"notes", "n"}}.dump();
        }
        const std::string decision = script.accepting.count(r.model_id) ? "accept" : "reject";
        if (prompt_contains(r, "Decide ACCEPT or REJECT for the given proposal")) {
            return json{{"decision", decision},
                        {"confidence", 0.8},
                        {"reasons", {"r"}},
                        {"scores",
                         {{"novelty", 7}, {"soundness", 6}, {"impact", 7}, {"clarity", 8}, {"feasibility", 5}}},
                        {"meta", {{"used_lit_search", false}}}}
                .dump();
        }
        if (prompt_contains(r, "final decision (ACCEPT/REJECT)")) {
            return json{{"decision", decision},
                        {"confidence", 0.6},
                        {"reasons", {"r"}},
                        {"scores",
                         {{"clarity", 7},
                          {"originality", 6},
                          {"quality_soundness", 6},
                          {"significance_impact", 5},
                          {"rating", 6}}},
                        {"meta", {{"used_lit_search", false}}}}
                .dump();
        }
        if (prompt_contains(r, "review of the research proposal")) return review_skeleton(core::Kind::kProposal);
        if (prompt_contains(r, "Review Task:")) return review_skeleton(core::Kind::kPaper);
        return std::nullopt;
    });
}

inline service::ServiceConfig loop_config(std::uint64_t seed = 42) {
    service::ServiceConfig c;
    c.seed = seed;
    c.panel = {"m0", "m1", "m2", "m3", "m4"};
    c.models.reviewer = "reviewer";
    c.models.planner = "planner";
    c.models.sub_reviewers = {"sub-a", "sub-b"};
    c.models.summarizer = "chair";
    c.scan.semantic.model_id = "judge";
    c.limits.workers = 2;
    return c;
}

/// Platform plus API over a scripted backend and a deterministic clock.
struct LoopHarness {
    StubGateway stub;
    llm::PromptLibrary prompts;
    ManualClock clock{1'700'000'000'000, 1000};
    std::unique_ptr<service::Platform> platform;
    std::unique_ptr<service::Api> api;

    explicit LoopHarness(service::ServiceConfig config = loop_config(), LoopScript script = {{"m0", "m1", "m2"}}) {
        install_loop_responder(*stub.backend, std::move(script));
        platform = std::make_unique<service::Platform>(std::move(config), stub.gateway, nullptr, prompts, clock);
        api = std::make_unique<service::Api>(*platform);
    }
};

inline nlohmann::json text_submission(std::string body, std::string kind = "proposal") {
    return {{"kind", kind}, {"body", std::move(body)}, {"attribution", {{"ai_developer", "agent-lab"}}}};
}

inline std::string proposal_text(int i) {
    return "Sparse Routing for Long-Context Models " + std::to_string(i) +
           "\n\nProblem: attention cost grows with sequence length.\n"
           "Method: route tokens to a small set of experts and measure memory on long inputs.\n"
           "Experiments: compare against dense baselines on three benchmarks.\n";
}

}  // namespace peerloop::stubs
