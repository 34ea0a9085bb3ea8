#include "peerloop/llm/chat.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "peerloop/common/error.hpp"
#include "peerloop/common/ids.hpp"

namespace peerloop::llm {

std::string_view to_string(Role r) { return r == Role::kSystem ? "system" : "user"; }

void validate(const ChatRequest& request) {
    if (request.model_id.empty()) throw Error(ErrorCode::kInvalidArgument, "model_id is empty");
    if (request.messages.empty()) throw Error(ErrorCode::kInvalidArgument, "request has no messages");
    if (request.temperature < 0) throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");
    if (request.max_output_tokens <= 0) throw Error(ErrorCode::kInvalidArgument, "max_output_tokens must be > 0");
}

namespace {

nlohmann::json messages_json(const ChatRequest& request) {
    auto arr = nlohmann::json::array();
    for (const auto& m : request.messages) arr.push_back({{"role", to_string(m.role)}, {"text", m.text}});
    return arr;
}

}  // namespace

std::string prompt_hash(const ChatRequest& request) {
    return sha256_hex(nlohmann::json{{"model", request.model_id}, {"messages", messages_json(request)}}.dump());
}

std::string messages_hash(const ChatRequest& request) {
    return sha256_hex(nlohmann::json{{"messages", messages_json(request)}}.dump());
}

ModelPanel::ModelPanel(std::vector<std::string> model_ids) : ids_(std::move(model_ids)) {
    if (ids_.size() != kSize)
        throw Error(ErrorCode::kWrongPanelSize, "panel needs exactly 5 models, got " + std::to_string(ids_.size()));
    std::set<std::string> seen(ids_.begin(), ids_.end());
    if (seen.size() != ids_.size()) throw Error(ErrorCode::kDuplicateModel, "panel models must be distinct");
}

}  // namespace peerloop::llm
