#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "peerloop/common/error.hpp"
#include "peerloop/llm/schema.hpp"
#include "peerloop/service/platform.hpp"

namespace peerloop::service {

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

int http_status(ErrorCode code);
ApiResponse error_response(ErrorCode code, const std::string& message);

/// Request/response contract shared by the REST routes and the tool
/// dispatcher. Inputs are validated against the operation's schema before
/// the platform is touched; every failure becomes an error body with a
/// status code instead of an exception.
class Api {
public:
    explicit Api(Platform& platform);

    ApiResponse submit(const nlohmann::json& input);
    ApiResponse get_submission(const std::string& id);
    ApiResponse request_review(const std::string& id, const nlohmann::json& input);
    ApiResponse get_review(const std::string& id, const std::string& review_id);
    ApiResponse revise(const std::string& id, const nlohmann::json& input);
    ApiResponse decide(const std::string& id, const nlohmann::json& input);
    ApiResponse decision_status(const std::string& id);
    ApiResponse external_review(const std::string& id, const nlohmann::json& input);
    ApiResponse like(const std::string& id);
    ApiResponse comment(const std::string& id, const nlohmann::json& input);
    ApiResponse feed(const nlohmann::json& input);

    /// {"tools": [{name, description, input_schema, output_schema}]}
    nlohmann::json manifest() const;
    ApiResponse call_tool(const std::string& name, const nlohmann::json& input);
    std::vector<std::string> tool_names() const;

    Platform& platform() { return platform_; }

    /// Body schemas of the REST operations, by operation name.
    static llm::Schema body_schema(const std::string& operation);

private:
    struct Tool {
        std::string name;
        std::string description;
        llm::Schema input;
        llm::Schema output;
        std::function<ApiResponse(const nlohmann::json&)> handler;
    };

    void add_tool(Tool tool);

    Platform& platform_;
    std::vector<Tool> tools_;
    std::map<std::string, std::size_t> tool_index_;
};

}  // namespace peerloop::service
