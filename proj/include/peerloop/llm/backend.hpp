#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "peerloop/common/error.hpp"
#include "peerloop/llm/chat.hpp"
#include "peerloop/net/http.hpp"

namespace peerloop::llm {

/// A chat-completion backend. Failures are reported as Error with
/// kTimeout, kRateLimited or kBackendError.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string chat(const ChatRequest& request) = 0;
    virtual std::string name() const = 0;
};

/// Deterministic stand-in for real models.
///
/// Replies are resolved in order: scripted failures, fixture files keyed by
/// prompt hash (`<hash>.txt`, with or without the model id folded in), then
/// responder callbacks. A request nothing answers fails with kBackendError.
class ScriptedBackend final : public Backend {
public:
    using Responder = std::function<std::optional<std::string>(const ChatRequest&)>;

    ScriptedBackend() = default;
    explicit ScriptedBackend(const std::filesystem::path& fixtures_dir);

    void add_fixture(const std::string& hash, std::string reply);
    void add_responder(Responder responder);
    /// Fail the next `count` calls for `model_id` ("*" = any model; count < 0 = forever).
    void fail_next(const std::string& model_id, int count, ErrorCode code = ErrorCode::kBackendError);

    std::string chat(const ChatRequest& request) override;
    std::string name() const override { return "scripted"; }

    int calls(const std::string& model_id) const;
    int total_calls() const { return total_.load(); }

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::string> fixtures_;
    std::vector<Responder> responders_;
    std::map<std::string, std::pair<int, ErrorCode>> failures_;
    std::map<std::string, int> calls_;
    std::atomic<int> total_{0};
};

struct HttpBackendConfig {
    std::string base_url;  // e.g. https://api.openai.com
    std::string api_key;
    std::string path;      // defaulted per flavour when empty
    std::map<std::string, std::string> extra_headers;
};

/// OpenAI-compatible `/v1/chat/completions`.
class OpenAiBackend final : public Backend {
public:
    OpenAiBackend(HttpBackendConfig config, std::shared_ptr<net::HttpTransport> transport);
    std::string chat(const ChatRequest& request) override;
    std::string name() const override { return "openai"; }

private:
    HttpBackendConfig config_;
    std::shared_ptr<net::HttpTransport> transport_;
};

/// Anthropic `/v1/messages`.
class AnthropicBackend final : public Backend {
public:
    AnthropicBackend(HttpBackendConfig config, std::shared_ptr<net::HttpTransport> transport);
    std::string chat(const ChatRequest& request) override;
    std::string name() const override { return "anthropic"; }

private:
    HttpBackendConfig config_;
    std::shared_ptr<net::HttpTransport> transport_;
};

/// Maps an HTTP status to the gateway error taxonomy (throws for non-2xx).
void raise_for_status(const net::HttpResponse& response, std::string_view backend);

}  // namespace peerloop::llm
