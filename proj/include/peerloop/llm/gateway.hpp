#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <semaphore>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "peerloop/llm/backend.hpp"
#include "peerloop/llm/chat.hpp"
#include "peerloop/llm/schema.hpp"

namespace peerloop::llm {

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{250};
    double multiplier = 2.0;
    std::chrono::milliseconds max_backoff{8000};
};

struct GatewayOptions {
    RetryPolicy retry;
    int structured_retries = 2;  // corrective re-prompts after the first attempt
    /// Injected so tests never sleep. Defaults to std::this_thread::sleep_for.
    std::function<void(std::chrono::milliseconds)> sleep;
};

/// Uniform entry point to all model backends.
///
/// Routes each request to the backend registered for its model id (or the
/// default backend), caps in-flight calls per backend, retries failures with
/// exponential backoff and validates structured output against registered
/// schemas.
class Gateway {
public:
    explicit Gateway(GatewayOptions options = {});
    ~Gateway();

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    /// Registers `backend` for `model_ids` (empty = default for unknown models).
    void add_backend(std::shared_ptr<Backend> backend, std::vector<std::string> model_ids = {},
                     int max_concurrency = 4);

    std::string complete(const ChatRequest& request);

    /// Completes, extracts and validates the JSON reply. Invalid replies are
    /// re-prompted with the validation errors appended, up to
    /// `structured_retries` times, then kSchemaViolation is thrown.
    nlohmann::json complete_structured(ChatRequest request, std::string_view schema_id);

    SchemaRegistry& schemas() { return schemas_; }
    const SchemaRegistry& schemas() const { return schemas_; }
    const GatewayOptions& options() const { return options_; }

private:
    struct Route;

    Route& route_for(const std::string& model_id);

    GatewayOptions options_;
    SchemaRegistry schemas_;
    std::vector<std::unique_ptr<Route>> routes_;
    std::map<std::string, Route*> by_model_;
    Route* default_route_ = nullptr;
};

/// Corrective instruction appended after an invalid structured reply.
std::string corrective_instruction(std::string_view previous_reply, const std::vector<std::string>& errors);

}  // namespace peerloop::llm
