#include "peerloop/llm/gateway.hpp"

#include <algorithm>
#include <thread>

#include <fmt/format.h>

#include "peerloop/llm/json_extract.hpp"
#include "peerloop/llm/schemas.hpp"

namespace peerloop::llm {

struct Gateway::Route {
    std::shared_ptr<Backend> backend;
    std::unique_ptr<std::counting_semaphore<1024>> slots;
};

Gateway::Gateway(GatewayOptions options) : options_(std::move(options)) {
    if (!options_.sleep) options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    if (options_.retry.max_attempts < 1) options_.retry.max_attempts = 1;
    if (options_.structured_retries < 0) options_.structured_retries = 0;
    schemas::register_builtin(schemas_);
}

Gateway::~Gateway() = default;

void Gateway::add_backend(std::shared_ptr<Backend> backend, std::vector<std::string> model_ids, int max_concurrency) {
    auto route = std::make_unique<Route>();
    route->backend = std::move(backend);
    route->slots = std::make_unique<std::counting_semaphore<1024>>(std::clamp(max_concurrency, 1, 1024));
    if (model_ids.empty()) default_route_ = route.get();
    for (auto& id : model_ids) by_model_[std::move(id)] = route.get();
    routes_.push_back(std::move(route));
}

Gateway::Route& Gateway::route_for(const std::string& model_id) {
    if (auto it = by_model_.find(model_id); it != by_model_.end()) return *it->second;
    if (default_route_) return *default_route_;
    throw Error(ErrorCode::kConfig, "no backend configured for model '" + model_id + "'");
}

std::string Gateway::complete(const ChatRequest& request) {
    validate(request);
    Route& route = route_for(request.model_id);
    const auto& policy = options_.retry;
    auto backoff = policy.initial_backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= policy.max_attempts; ++attempt) {
        try {
            route.slots->acquire();
            struct Release {
                std::counting_semaphore<1024>& s;
                ~Release() { s.release(); }
            } release{*route.slots};
            return route.backend->chat(request);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::kConfig || e.code() == ErrorCode::kInvalidArgument) throw;
            last_error = e.what();
        }
        if (attempt < policy.max_attempts) {
            options_.sleep(backoff);
            backoff = std::min(policy.max_backoff, std::chrono::milliseconds(static_cast<long long>(
                                                       static_cast<double>(backoff.count()) * policy.multiplier)));
        }
    }
    throw Error(ErrorCode::kBackendError,
                fmt::format("{} failed after {} attempts: {}", request.model_id, policy.max_attempts, last_error));
}

std::string corrective_instruction(std::string_view previous_reply, const std::vector<std::string>& errors) {
    return fmt::format(
        "Your previous reply could not be accepted.\n"
        "Previous reply:\n{}\n\n"
        "Validation errors:\n- {}\n\n"
        "Reply again with ONLY the valid JSON object in the required format, with no extra text.",
        previous_reply, fmt::join(errors, "\n- "));
}

nlohmann::json Gateway::complete_structured(ChatRequest request, std::string_view schema_id) {
    const Schema schema = schemas_.get(std::string(schema_id));
    std::vector<std::string> errors;
    for (int attempt = 0; attempt <= options_.structured_retries; ++attempt) {
        const std::string reply = complete(request);
        errors.clear();
        if (auto doc = extract_json(reply)) {
            errors = schema.validate(*doc);
            if (errors.empty()) return *doc;
        } else {
            errors.push_back("reply contains no parseable JSON object");
        }
        request.messages.push_back({Role::kUser, corrective_instruction(reply, errors)});
    }
    throw Error(ErrorCode::kSchemaViolation,
                fmt::format("{} output rejected after {} corrective retries: {}", schema_id,
                            options_.structured_retries, fmt::join(errors, "; ")));
}

}  // namespace peerloop::llm
