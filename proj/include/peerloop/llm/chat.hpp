#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace peerloop::llm {

enum class Role { kSystem, kUser };

std::string_view to_string(Role r);

struct Message {
    Role role = Role::kUser;
    std::string text;
};

struct ChatRequest {
    std::string model_id;
    std::vector<Message> messages;
    double temperature = 0.0;
    int max_output_tokens = 4096;
};

/// Throws Error(kInvalidArgument) unless the request satisfies its invariants.
void validate(const ChatRequest& request);

/// Stable hash of (model_id, messages); keys the scripted backend's fixtures.
std::string prompt_hash(const ChatRequest& request);
/// Same, ignoring the model id.
std::string messages_hash(const ChatRequest& request);

/// Five distinct model identifiers.
class ModelPanel {
public:
    explicit ModelPanel(std::vector<std::string> model_ids);
    const std::vector<std::string>& model_ids() const noexcept { return ids_; }

    static constexpr std::size_t kSize = 5;

private:
    std::vector<std::string> ids_;
};

}  // namespace peerloop::llm
