#pragma once

#include <memory>
#include <string>

#include "peerloop/common/assets.hpp"
#include "peerloop/core/types.hpp"
#include "peerloop/llm/backend.hpp"
#include "peerloop/llm/gateway.hpp"
#include "peerloop/llm/schemas.hpp"

namespace peerloop::stubs {

inline llm::GatewayOptions instant_retries() {
    llm::GatewayOptions o;
    o.sleep = [](std::chrono::milliseconds) {};
    return o;
}

/// Gateway with builtin schemas and one scripted backend for every model.
struct StubGateway {
    std::shared_ptr<llm::ScriptedBackend> backend = std::make_shared<llm::ScriptedBackend>();
    llm::Gateway gateway{instant_retries()};

    explicit StubGateway(int max_concurrency = 4) {
        llm::schemas::register_builtin(gateway.schemas());
        gateway.add_backend(backend, {}, max_concurrency);
    }
};

/// The JSON output skeleton printed at the end of a review prompt, verbatim.
inline std::string review_skeleton(core::Kind kind) {
    const std::string prompt(assets::get(kind == core::Kind::kProposal ? "prompts/review_proposal.txt"
                                                                        : "prompts/review_paper.txt"));
    const auto start = prompt.find("{\n", prompt.find("Output Format"));
    const auto end = prompt.find("\n}\n", start);
    return prompt.substr(start, end + 2 - start);
}

inline bool prompt_contains(const llm::ChatRequest& r, std::string_view needle) {
    for (const auto& m : r.messages)
        if (m.text.find(needle) != std::string::npos) return true;
    return false;
}

}  // namespace peerloop::stubs
