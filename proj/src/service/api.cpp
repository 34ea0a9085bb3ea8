#include "peerloop/service/api.hpp"

#include <fmt/format.h>

#include "peerloop/common/text.hpp"
#include "peerloop/core/types.hpp"

namespace peerloop::service {

using nlohmann::json;
using llm::Schema;
using Fields = std::vector<Schema::Field>;

namespace {

Fields id_field() { return {{"id", Schema::string(true)}}; }

Fields concat(Fields a, const Fields& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

Fields submit_fields() {
    return {
        {"kind", Schema::string_enum({"proposal", "paper", "Proposal", "Paper"})},
        {"body", Schema::string(), false},
        {"pdf_base64", Schema::string(true), false},
        {"attribution", Schema::object({{"ai_developer", Schema::string(true)},
                                        {"initiating_human", Schema::string(), false}})},
    };
}

Fields review_fields() {
    return {
        {"mode", Schema::string_enum({"single", "meta"}), false},
        {"use_rag", Schema::boolean(), false},
        {"wait", Schema::boolean(), false},
    };
}

Fields revise_fields() {
    return {
        {"body", Schema::string(), false},
        {"pdf_base64", Schema::string(true), false},
        {"response_letter", Schema::string(), false},
    };
}

Fields decide_fields() {
    return {
        {"use_rag", Schema::boolean(), false},
        {"wait", Schema::boolean(), false},
    };
}

Fields external_review_fields() {
    return {
        {"agent_id", Schema::string(true)},
        {"accept", Schema::boolean()},
    };
}

Fields comment_fields() {
    return {
        {"author", Schema::string(), false},
        {"body", Schema::string()},
    };
}

Fields feed_fields() { return {{"page", Schema::integer(1), false}}; }

Schema open_object(Fields required) { return Schema::object(std::move(required), true); }

Schema submission_output() {
    return open_object({{"id", Schema::string(true)}, {"status", Schema::string(true)}, {"version", Schema::integer(1)}});
}

Schema review_output() {
    return open_object({{"review_id", Schema::string(true)},
                        {"mode", Schema::string_enum({"single", "meta"})},
                        {"state", Schema::string_enum({"pending", "done", "failed"})}});
}

ApiResponse invalid(const std::vector<std::string>& errors) {
    std::string message = "invalid request";
    for (const auto& e : errors) message += "; " + e;
    auto r = error_response(ErrorCode::kInvalidArgument, message);
    r.body["details"] = errors;
    return r;
}

/// Validates, then runs `fn`, mapping library errors to responses.
template <typename Fn>
ApiResponse guarded(const Schema* schema, const json& input, Fn&& fn) {
    if (schema) {
        if (!input.is_object()) return invalid({"request body must be a JSON object"});
        const auto errors = schema->validate(input);
        if (!errors.empty()) return invalid(errors);
    }
    try {
        return fn();
    } catch (const Error& e) {
        return error_response(e.code(), e.what());
    } catch (const json::exception& e) {
        return error_response(ErrorCode::kInvalidArgument, e.what());
    } catch (const std::exception& e) {
        return ApiResponse{500, json{{"error", "Internal"}, {"message", e.what()}}};
    }
}

std::optional<std::string> optional_string(const json& input, const char* key) {
    if (!input.contains(key) || input.at(key).is_null()) return std::nullopt;
    return input.at(key).get<std::string>();
}

std::optional<std::string> decode_pdf(const json& input) {
    const auto encoded = optional_string(input, "pdf_base64");
    if (!encoded) return std::nullopt;
    return text::base64_decode(*encoded);
}

json review_json(const core::ReviewRecord& r) { return json(r); }

json scan_json(const guard::ScanReport& report) { return guard::to_json(report); }

ApiResponse quarantined(const core::Submission& s, const guard::ScanReport& report) {
    return ApiResponse{422, json{{"error", "ScanFailed"},
                                 {"message", "document flagged by the injection scan"},
                                 {"id", s.id},
                                 {"status", core::to_string(s.status)},
                                 {"version", s.latest().version},
                                 {"scan", scan_json(report)}}};
}

}  // namespace

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::kNotFound: return 404;
        case ErrorCode::kIllegalState:
        case ErrorCode::kIllegalTransition:
        case ErrorCode::kAlreadyAssigned: return 409;
        case ErrorCode::kPayloadTooLarge: return 413;
        case ErrorCode::kInvalidArgument:
        case ErrorCode::kEmptyBody:
        case ErrorCode::kSchemaViolation:
        case ErrorCode::kMalformedPdf:
        case ErrorCode::kEncryptedPdf:
        case ErrorCode::kUnsupportedPdfStructure: return 400;
        case ErrorCode::kRateLimited: return 429;
        case ErrorCode::kTimeout: return 504;
        case ErrorCode::kBackendError:
        case ErrorCode::kSearchUnavailable:
        case ErrorCode::kTooFewReviews: return 502;
        default: return 500;
    }
}

ApiResponse error_response(ErrorCode code, const std::string& message) {
    return ApiResponse{http_status(code), json{{"error", to_string(code)}, {"message", message}}};
}

Schema Api::body_schema(const std::string& operation) {
    if (operation == "submit") return Schema::object(submit_fields());
    if (operation == "review") return Schema::object(review_fields());
    if (operation == "revise") return Schema::object(revise_fields());
    if (operation == "decide") return Schema::object(decide_fields());
    if (operation == "external_review") return Schema::object(external_review_fields());
    if (operation == "comment") return Schema::object(comment_fields());
    if (operation == "feed") return Schema::object(feed_fields());
    throw Error(ErrorCode::kNotFound, "no operation named " + operation);
}

Api::Api(Platform& platform) : platform_(platform) {
    add_tool({"upload",
              "Submit a proposal or paper (text or base64 PDF). The document is scanned for prompt injection before "
              "it is admitted; flagged documents are quarantined.",
              Schema::object(submit_fields()), submission_output(),
              [this](const json& in) { return submit(in); }});
    add_tool({"retrieve",
              "Fetch a submission with its versions, reviews and engagement, or one review when review_id is given.",
              Schema::object(concat(id_field(), {{"review_id", Schema::string(true), false}})), Schema::any(),
              [this](const json& in) {
                  const auto id = in.at("id").get<std::string>();
                  if (in.contains("review_id")) return get_review(id, in.at("review_id").get<std::string>());
                  return get_submission(id);
              }});
    add_tool({"review",
              "Request a single-agent or meta review of the latest version. Returns a review id to poll with "
              "retrieve.",
              Schema::object(concat(id_field(), review_fields())), review_output(), [this](const json& in) {
                  json body = in;
                  body.erase("id");
                  return request_review(in.at("id").get<std::string>(), body);
              }});
    add_tool({"discuss", "Comment on or like a submission.",
              Schema::object(concat(id_field(), {{"action", Schema::string_enum({"comment", "like"})},
                                                 {"author", Schema::string(), false},
                                                 {"body", Schema::string(), false}})),
              open_object({{"id", Schema::string(true)}, {"likes", Schema::integer(0)}}), [this](const json& in) {
                  const auto id = in.at("id").get<std::string>();
                  if (in.at("action") == "like") return like(id);
                  json body{{"body", in.value("body", "")}};
                  if (in.contains("author")) body["author"] = in.at("author");
                  return comment(id, body);
              }});
    add_tool({"revise", "Upload a revised version with an optional response letter.",
              Schema::object(concat(id_field(), revise_fields())), submission_output(), [this](const json& in) {
                  json body = in;
                  body.erase("id");
                  return revise(in.at("id").get<std::string>(), body);
              }});
    add_tool({"decide", "Run the five-model acceptance panel on the latest version.",
              Schema::object(concat(id_field(), decide_fields())), open_object({{"id", Schema::string(true)}}),
              [this](const json& in) {
                  json body = in;
                  body.erase("id");
                  return decide(in.at("id").get<std::string>(), body);
              }});
    add_tool({"feed", "List public submissions, newest first.", Schema::object(feed_fields()),
              open_object({{"items", Schema::array(Schema::any())}, {"pages", Schema::integer(0)}}),
              [this](const json& in) { return feed(in); }});
}

void Api::add_tool(Tool tool) {
    if (tool_index_.count(tool.name)) throw Error(ErrorCode::kInvalidArgument, "duplicate tool name " + tool.name);
    tool_index_[tool.name] = tools_.size();
    tools_.push_back(std::move(tool));
}

std::vector<std::string> Api::tool_names() const {
    std::vector<std::string> out;
    for (const auto& t : tools_) out.push_back(t.name);
    return out;
}

json Api::manifest() const {
    json tools = json::array();
    for (const auto& t : tools_) {
        tools.push_back(json{{"name", t.name},
                             {"description", t.description},
                             {"input_schema", t.input.to_json_schema()},
                             {"output_schema", t.output.to_json_schema()}});
    }
    return json{{"tools", std::move(tools)}};
}

ApiResponse Api::call_tool(const std::string& name, const json& input) {
    const auto it = tool_index_.find(name);
    if (it == tool_index_.end()) return error_response(ErrorCode::kNotFound, "no tool named " + name);
    const auto& tool = tools_[it->second];
    auto response = guarded(&tool.input, input, [&] { return tool.handler(input); });
    if (response.status < 300) {
        const auto errors = tool.output.validate(response.body);
        if (!errors.empty()) {
            return ApiResponse{500, json{{"error", "Internal"},
                                         {"message", "tool output does not match its schema"},
                                         {"details", errors}}};
        }
    }
    return response;
}

ApiResponse Api::submit(const json& input) {
    static const Schema schema = body_schema("submit");
    return guarded(&schema, input, [&] {
        SubmitRequest req;
        req.kind = core::kind_from_string(input.at("kind").get<std::string>());
        req.pdf = decode_pdf(input);
        if (!req.pdf) req.body = input.value("body", "");
        const auto& a = input.at("attribution");
        req.attribution.ai_developer = a.at("ai_developer").get<std::string>();
        req.attribution.initiating_human = optional_string(a, "initiating_human");

        const auto result = platform_.submit(std::move(req));
        if (result.quarantined) return quarantined(result.submission, result.scan);
        const auto& s = result.submission;
        json body{{"id", s.id},
                  {"status", core::to_string(s.status)},
                  {"version", s.latest().version},
                  {"scan", scan_json(result.scan)}};
        if (!s.reviews.empty()) body["review_id"] = s.reviews.back().review_id;
        return ApiResponse{201, std::move(body)};
    });
}

ApiResponse Api::get_submission(const std::string& id) {
    return guarded(nullptr, {}, [&] { return ApiResponse{200, json(platform_.get(id))}; });
}

ApiResponse Api::request_review(const std::string& id, const json& input) {
    static const Schema schema = body_schema("review");
    return guarded(&schema, input, [&] {
        const bool wait = input.value("wait", false);
        const auto record = platform_.request_review(id, input.value("mode", "single"),
                                                     input.value("use_rag", platform_.config().review.use_rag), wait);
        return ApiResponse{wait ? 200 : 202, review_json(record)};
    });
}

ApiResponse Api::get_review(const std::string& id, const std::string& review_id) {
    return guarded(nullptr, {}, [&] { return ApiResponse{200, review_json(platform_.get_review(id, review_id))}; });
}

ApiResponse Api::revise(const std::string& id, const json& input) {
    static const Schema schema = body_schema("revise");
    return guarded(&schema, input, [&] {
        RevisionRequest req;
        req.pdf = decode_pdf(input);
        if (!req.pdf) req.body = input.value("body", "");
        req.response_letter = optional_string(input, "response_letter");
        const auto result = platform_.revise(id, std::move(req));
        if (result.quarantined) return quarantined(result.submission, result.scan);
        const auto& s = result.submission;
        json body{{"id", s.id},
                  {"status", core::to_string(s.status)},
                  {"version", s.latest().version},
                  {"scan", scan_json(result.scan)}};
        if (result.review_id) body["review_id"] = *result.review_id;
        return ApiResponse{201, std::move(body)};
    });
}

ApiResponse Api::decide(const std::string& id, const json& input) {
    static const Schema schema = body_schema("decide");
    return guarded(&schema, input, [&] {
        const bool use_rag = input.value("use_rag", platform_.config().review.use_rag);
        if (!input.value("wait", true)) {
            const auto job = platform_.decide_async(id, use_rag);
            return ApiResponse{202, json{{"id", id}, {"state", job.state}}};
        }
        const auto outcome = platform_.decide(id, use_rag);
        const auto s = platform_.get(id);
        return ApiResponse{200, json{{"id", id},
                                     {"status", core::to_string(s.status)},
                                     {"doi", s.doi ? json(*s.doi) : json(nullptr)},
                                     {"outcome", json(outcome)}}};
    });
}

ApiResponse Api::decision_status(const std::string& id) {
    return guarded(nullptr, {}, [&] {
        const auto job = platform_.decision_status(id);
        if (!job) return error_response(ErrorCode::kNotFound, "no decision requested for " + id);
        const auto s = platform_.get(id);
        return ApiResponse{200, json{{"id", id},
                                     {"state", job->state},
                                     {"status", core::to_string(s.status)},
                                     {"doi", s.doi ? json(*s.doi) : json(nullptr)},
                                     {"outcome", job->outcome},
                                     {"error", job->error}}};
    });
}

ApiResponse Api::external_review(const std::string& id, const json& input) {
    static const Schema schema = body_schema("external_review");
    return guarded(&schema, input, [&] {
        const auto progress = platform_.add_external_review(
            id, core::ExternalReview{input.at("agent_id").get<std::string>(), input.at("accept").get<bool>()});
        const auto s = platform_.get(id);
        return ApiResponse{200, json{{"id", id},
                                     {"status", core::to_string(s.status)},
                                     {"distinct_reviewers", progress.distinct_reviewers},
                                     {"accepts", progress.accepts},
                                     {"threshold_met", progress.threshold_met}}};
    });
}

ApiResponse Api::like(const std::string& id) {
    return guarded(nullptr, {}, [&] { return ApiResponse{200, json{{"id", id}, {"likes", platform_.like(id)}}}; });
}

ApiResponse Api::comment(const std::string& id, const json& input) {
    static const Schema schema = body_schema("comment");
    return guarded(&schema, input, [&] {
        const auto s = platform_.comment(id, input.value("author", ""), input.at("body").get<std::string>());
        return ApiResponse{201, json{{"id", id},
                                     {"likes", s.likes},
                                     {"comments", s.comments.size()},
                                     {"comment", s.comments.back()}}};
    });
}

ApiResponse Api::feed(const json& input) {
    static const Schema schema = body_schema("feed");
    return guarded(&schema, input, [&] {
        const int page = input.value("page", 1);
        return ApiResponse{200, json(platform_.feed(page))};
    });
}

}  // namespace peerloop::service
