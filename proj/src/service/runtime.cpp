#include "peerloop/service/runtime.hpp"

#include <cstdlib>

#include <fmt/format.h>

#include "peerloop/common/error.hpp"
#include "peerloop/llm/backend.hpp"
#include "peerloop/llm/schemas.hpp"
#include "peerloop/net/http.hpp"

namespace peerloop::service {

namespace {

std::string env_or_empty(const std::string& name) {
    if (name.empty()) return {};
    const char* v = std::getenv(name.c_str());
    return v ? v : "";
}

}  // namespace

std::unique_ptr<llm::Gateway> make_gateway(const ServiceConfig& config) {
    auto gateway = std::make_unique<llm::Gateway>();
    llm::schemas::register_builtin(gateway->schemas());
    auto transport = std::make_shared<net::HttplibTransport>();
    for (const auto& spec : config.backends) {
        std::shared_ptr<llm::Backend> backend;
        if (spec.type == "scripted") {
            backend = spec.fixtures_dir.empty() ? std::make_shared<llm::ScriptedBackend>()
                                                : std::make_shared<llm::ScriptedBackend>(spec.fixtures_dir);
        } else {
            llm::HttpBackendConfig hc;
            hc.base_url = spec.base_url;
            hc.api_key = env_or_empty(spec.api_key_env);
            if (spec.type == "openai") {
                backend = std::make_shared<llm::OpenAiBackend>(hc, transport);
            } else {
                backend = std::make_shared<llm::AnthropicBackend>(hc, transport);
            }
        }
        gateway->add_backend(backend, spec.models, spec.max_concurrency);
    }
    return gateway;
}

std::shared_ptr<lit::SearchClient> make_search(const ServiceConfig& config, const Clock& clock) {
    const auto& lit = config.literature;
    std::shared_ptr<lit::SearchClient> inner;
    if (lit.provider == "fixture") {
        inner = std::make_shared<lit::FixtureSearch>(std::filesystem::path(lit.fixture));
    } else if (lit.provider == "scholar") {
        lit::ScholarConfig sc;
        sc.base_url = lit.base_url;
        sc.api_key = env_or_empty(lit.api_key_env);
        inner = std::make_shared<lit::ScholarSearch>(sc, std::make_shared<net::HttplibTransport>());
    } else {
        return nullptr;
    }
    if (lit.cache_ttl_seconds <= 0) return inner;
    return std::make_shared<lit::CachedSearch>(inner, clock, std::chrono::seconds(lit.cache_ttl_seconds));
}

review::ReviewConfig review_config(const ServiceConfig& c) {
    review::ReviewConfig r;
    r.proposal_budget = c.budgets.proposal;
    r.paper_budget = c.budgets.paper;
    r.literature_budget = c.budgets.literature;
    r.literature_k = c.literature.k;
    return r;
}

meta::MetaConfig meta_config(const ServiceConfig& c) {
    meta::MetaConfig m;
    m.planner_budget = c.budgets.proposal;
    m.submission_budget = c.budgets.paper;
    m.literature_budget = c.budgets.literature;
    m.literature_k = c.literature.k;
    return m;
}

voting::VotingConfig voting_config(const ServiceConfig& c) {
    voting::VotingConfig v;
    v.proposal_budget = c.budgets.proposal;
    v.paper_budget = c.budgets.paper;
    v.literature_budget = c.budgets.literature;
    v.revision_context_budget = c.budgets.revision_context;
    v.literature_k = c.literature.k;
    return v;
}

pairwise::PairwiseConfig pairwise_config(const ServiceConfig& c) {
    pairwise::PairwiseConfig p;
    p.proposal_budget = c.budgets.proposal;
    p.paper_budget = c.budgets.paper;
    p.literature_budget = c.budgets.literature;
    p.literature_k = c.literature.k;
    return p;
}

meta::ReviewStandard standard_for(const ServiceConfig& c, core::Kind kind) {
    const auto it = c.standards.find(std::string(core::to_string(kind)));
    auto standard = it != c.standards.end() ? meta::load_standard(it->second) : meta::builtin_standard(kind);
    if (standard.kind != kind)
        throw Error(ErrorCode::kConfig, fmt::format("standard for {} declares kind {}", core::to_string(kind),
                                                    core::to_string(standard.kind)));
    return standard;
}

}  // namespace peerloop::service
