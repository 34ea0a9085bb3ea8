#include "peerloop/llm/backend.hpp"

#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace peerloop::llm {

using nlohmann::json;

ScriptedBackend::ScriptedBackend(const std::filesystem::path& fixtures_dir) {
    if (!std::filesystem::is_directory(fixtures_dir))
        throw Error(ErrorCode::kConfig, "stub fixtures directory not found: " + fixtures_dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(fixtures_dir)) {
        if (entry.path().extension() != ".txt") continue;
        std::ifstream in(entry.path(), std::ios::binary);
        fixtures_[entry.path().stem().string()] = std::string(std::istreambuf_iterator<char>(in), {});
    }
}

void ScriptedBackend::add_fixture(const std::string& hash, std::string reply) {
    std::lock_guard lock(mutex_);
    fixtures_[hash] = std::move(reply);
}

void ScriptedBackend::add_responder(Responder responder) {
    std::lock_guard lock(mutex_);
    responders_.push_back(std::move(responder));
}

void ScriptedBackend::fail_next(const std::string& model_id, int count, ErrorCode code) {
    std::lock_guard lock(mutex_);
    failures_[model_id] = {count, code};
}

int ScriptedBackend::calls(const std::string& model_id) const {
    std::lock_guard lock(mutex_);
    auto it = calls_.find(model_id);
    return it == calls_.end() ? 0 : it->second;
}

std::string ScriptedBackend::chat(const ChatRequest& request) {
    std::vector<Responder> responders;
    {
        std::lock_guard lock(mutex_);
        ++calls_[request.model_id];
        ++total_;
        for (const auto& key : {request.model_id, std::string("*")}) {
            auto it = failures_.find(key);
            if (it != failures_.end() && it->second.first != 0) {
                if (it->second.first > 0) --it->second.first;
                throw Error(it->second.second, fmt::format("scripted failure for {}", request.model_id));
            }
        }
        if (auto it = fixtures_.find(prompt_hash(request)); it != fixtures_.end()) return it->second;
        if (auto it = fixtures_.find(messages_hash(request)); it != fixtures_.end()) return it->second;
        responders = responders_;
    }
    for (const auto& r : responders) {
        if (auto reply = r(request)) return *reply;
    }
    throw Error(ErrorCode::kBackendError, "no scripted reply for prompt " + prompt_hash(request));
}

void raise_for_status(const net::HttpResponse& response, std::string_view backend) {
    if (response.status >= 200 && response.status < 300) return;
    const auto msg = fmt::format("{} returned HTTP {}: {}", backend, response.status, response.body.substr(0, 300));
    if (response.status == 429) throw Error(ErrorCode::kRateLimited, msg);
    if (response.status == 408 || response.status == 504) throw Error(ErrorCode::kTimeout, msg);
    throw Error(ErrorCode::kBackendError, msg);
}

namespace {

net::HttpResponse send_or_raise(net::HttpTransport& transport, const net::HttpRequest& req, std::string_view name) {
    try {
        return transport.send(req);
    } catch (const net::TransportError& e) {
        throw Error(e.timed_out ? ErrorCode::kTimeout : ErrorCode::kBackendError,
                    fmt::format("{}: {}", name, e.what()));
    }
}

json parse_body(const std::string& body, std::string_view name) {
    auto doc = json::parse(body, nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorCode::kBackendError, fmt::format("{}: response is not JSON", name));
    return doc;
}

}  // namespace

OpenAiBackend::OpenAiBackend(HttpBackendConfig config, std::shared_ptr<net::HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
    if (config_.path.empty()) config_.path = "/v1/chat/completions";
}

std::string OpenAiBackend::chat(const ChatRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) messages.push_back({{"role", to_string(m.role)}, {"content", m.text}});
    json body{{"model", request.model_id},
              {"messages", messages},
              {"temperature", request.temperature},
              {"max_tokens", request.max_output_tokens}};
    net::HttpRequest req{"POST", config_.base_url + config_.path, {{"Content-Type", "application/json"}}, body.dump()};
    if (!config_.api_key.empty()) req.headers.emplace_back("Authorization", "Bearer " + config_.api_key);
    for (const auto& [k, v] : config_.extra_headers) req.headers.emplace_back(k, v);

    const auto res = send_or_raise(*transport_, req, name());
    raise_for_status(res, name());
    const auto doc = parse_body(res.body, name());
    try {
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::kBackendError, std::string("openai: unexpected response shape: ") + e.what());
    }
}

AnthropicBackend::AnthropicBackend(HttpBackendConfig config, std::shared_ptr<net::HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
    if (config_.path.empty()) config_.path = "/v1/messages";
}

std::string AnthropicBackend::chat(const ChatRequest& request) {
    std::string system;
    json messages = json::array();
    for (const auto& m : request.messages) {
        if (m.role == Role::kSystem) {
            if (!system.empty()) system += "\n\n";
            system += m.text;
        } else {
            messages.push_back({{"role", "user"}, {"content", m.text}});
        }
    }
    json body{{"model", request.model_id},
              {"messages", messages},
              {"temperature", request.temperature},
              {"max_tokens", request.max_output_tokens}};
    if (!system.empty()) body["system"] = system;
    net::HttpRequest req{"POST",
                         config_.base_url + config_.path,
                         {{"Content-Type", "application/json"}, {"anthropic-version", "2023-06-01"}},
                         body.dump()};
    if (!config_.api_key.empty()) req.headers.emplace_back("x-api-key", config_.api_key);
    for (const auto& [k, v] : config_.extra_headers) req.headers.emplace_back(k, v);

    const auto res = send_or_raise(*transport_, req, name());
    raise_for_status(res, name());
    const auto doc = parse_body(res.body, name());
    try {
        std::string out;
        for (const auto& block : doc.at("content")) {
            if (block.value("type", "") == "text") out += block.at("text").get<std::string>();
        }
        return out;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::kBackendError, std::string("anthropic: unexpected response shape: ") + e.what());
    }
}

}  // namespace peerloop::llm
