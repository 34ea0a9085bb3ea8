#include "peerloop/service/server.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "peerloop/common/error.hpp"

namespace peerloop::service {

using nlohmann::json;

bool RateLimiter::allow(const std::string& key, std::chrono::steady_clock::time_point now) {
    if (per_minute_ <= 0) return true;
    std::lock_guard lock(mutex_);
    auto [it, fresh] = buckets_.try_emplace(key, Bucket{static_cast<double>(per_minute_), now});
    auto& b = it->second;
    if (!fresh) {
        const double elapsed = std::chrono::duration<double>(now - b.last).count();
        b.tokens = std::min<double>(per_minute_, b.tokens + elapsed * per_minute_ / 60.0);
        b.last = now;
    }
    if (b.tokens < 1.0) return false;
    b.tokens -= 1.0;
    return true;
}

namespace {

void send(httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
    send(res, error_response(code, message));
}

/// Empty bodies count as {} so bodiless POSTs work for optional-only schemas.
bool parse_body(const httplib::Request& req, httplib::Response& res, json& out) {
    if (req.body.empty()) {
        out = json::object();
        return true;
    }
    try {
        out = json::parse(req.body);
        return true;
    } catch (const json::parse_error& e) {
        send_error(res, ErrorCode::kInvalidArgument, fmt::format("malformed JSON: {}", e.what()));
        return false;
    }
}

bool query_flag(const httplib::Request& req, const char* name, bool& out) {
    if (!req.has_param(name)) return false;
    const auto v = req.get_param_value(name);
    out = v.empty() || v == "1" || v == "true" || v == "yes";
    return true;
}

bool constant_time_equal(const std::string& a, const std::string& b) {
    if (a.size() != b.size()) return false;
    unsigned char diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i) diff |= static_cast<unsigned char>(a[i] ^ b[i]);
    return diff == 0;
}

}  // namespace

HttpServer::HttpServer(Api& api, const ServiceConfig& config)
    : api_(api), config_(config), server_(std::make_unique<httplib::Server>()),
      limiter_(config.limits.requests_per_minute) {
    routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::routes() {
    auto& s = *server_;
    // Base64 inflates a PDF by a third; leave room for it and the JSON wrapper.
    s.set_payload_max_length(config_.limits.max_body_bytes / 3 * 4 + 64 * 1024);

    s.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
        if (req.path == "/health") return httplib::Server::HandlerResponse::Unhandled;
        const auto key = req.get_header_value(kApiKeyHeader);
        if (config_.api_key && !constant_time_equal(key, *config_.api_key)) {
            res.status = 401;
            res.set_content(json{{"error", "Unauthorized"}, {"message", "missing or invalid API key"}}.dump(),
                            "application/json");
            return httplib::Server::HandlerResponse::Handled;
        }
        if (!limiter_.allow(key.empty() ? req.remote_addr : key)) {
            res.set_header("Retry-After", "60");
            send_error(res, ErrorCode::kRateLimited, "rate limit exceeded");
            return httplib::Server::HandlerResponse::Handled;
        }
        return httplib::Server::HandlerResponse::Unhandled;
    });

    s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string message = "unknown error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            message = e.what();
        } catch (...) {
        }
        res.status = 500;
        res.set_content(json{{"error", "Internal"}, {"message", message}}.dump(), "application/json");
    });

    s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (!res.body.empty()) return;
        const char* name = res.status == 413 ? "PayloadTooLarge" : res.status == 404 ? "NotFound" : "HttpError";
        res.set_content(json{{"error", name}, {"message", httplib::status_message(res.status)}}.dump(),
                        "application/json");
    });

    s.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"ok":true})", "application/json");
    });

    s.Post("/submissions", [this](const httplib::Request& req, httplib::Response& res) {
        json body;
        if (req.get_header_value("Content-Type").rfind("application/pdf", 0) == 0) {
            // Raw upload: metadata travels in the query string.
            body = json{{"kind", req.get_param_value("kind")},
                        {"pdf_base64", httplib::detail::base64_encode(req.body)},
                        {"attribution", {{"ai_developer", req.get_param_value("ai_developer")}}}};
            if (req.has_param("initiating_human"))
                body["attribution"]["initiating_human"] = req.get_param_value("initiating_human");
        } else if (!parse_body(req, res, body)) {
            return;
        }
        send(res, api_.submit(body));
    });

    s.Get(R"(/submissions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        send(res, api_.get_submission(req.matches[1]));
    });

    s.Post(R"(/submissions/([^/]+)/reviews)", [this](const httplib::Request& req, httplib::Response& res) {
        json body;
        if (!parse_body(req, res, body)) return;
        if (req.has_param("mode")) body["mode"] = req.get_param_value("mode");
        bool flag = false;
        if (query_flag(req, "use_rag", flag)) body["use_rag"] = flag;
        if (query_flag(req, "wait", flag)) body["wait"] = flag;
        send(res, api_.request_review(req.matches[1], body));
    });

    s.Get(R"(/submissions/([^/]+)/reviews/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        send(res, api_.get_review(req.matches[1], req.matches[2]));
    });

    s.Post(R"(/submissions/([^/]+)/versions)", [this](const httplib::Request& req, httplib::Response& res) {
        json body;
        if (!parse_body(req, res, body)) return;
        send(res, api_.revise(req.matches[1], body));
    });

    s.Post(R"(/submissions/([^/]+)/decision)", [this](const httplib::Request& req, httplib::Response& res) {
        json body;
        if (!parse_body(req, res, body)) return;
        bool flag = false;
        if (query_flag(req, "use_rag", flag)) body["use_rag"] = flag;
        if (query_flag(req, "wait", flag)) body["wait"] = flag;
        send(res, api_.decide(req.matches[1], body));
    });

    s.Get(R"(/submissions/([^/]+)/decision)", [this](const httplib::Request& req, httplib::Response& res) {
        send(res, api_.decision_status(req.matches[1]));
    });

    s.Post(R"(/submissions/([^/]+)/external-reviews)", [this](const httplib::Request& req, httplib::Response& res) {
        json body;
        if (!parse_body(req, res, body)) return;
        send(res, api_.external_review(req.matches[1], body));
    });

    s.Post(R"(/submissions/([^/]+)/likes)", [this](const httplib::Request& req, httplib::Response& res) {
        send(res, api_.like(req.matches[1]));
    });

    s.Post(R"(/submissions/([^/]+)/comments)", [this](const httplib::Request& req, httplib::Response& res) {
        json body;
        if (!parse_body(req, res, body)) return;
        send(res, api_.comment(req.matches[1], body));
    });

    s.Get("/feed", [this](const httplib::Request& req, httplib::Response& res) {
        json body = json::object();
        if (req.has_param("page")) {
            try {
                body["page"] = std::stoi(req.get_param_value("page"));
            } catch (const std::exception&) {
                send_error(res, ErrorCode::kInvalidArgument, "page must be an integer");
                return;
            }
        }
        send(res, api_.feed(body));
    });

    s.Get("/tools", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(api_.manifest().dump(), "application/json");
    });

    s.Post(R"(/tools/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        json body;
        if (!parse_body(req, res, body)) return;
        send(res, api_.call_tool(req.matches[1], body));
    });
}

int HttpServer::bind() {
    if (config_.port == 0) {
        port_ = server_->bind_to_any_port(config_.host);
    } else {
        port_ = server_->bind_to_port(config_.host, config_.port) ? config_.port : -1;
    }
    if (port_ < 0) throw Error(ErrorCode::kIo, fmt::format("cannot bind {}:{}", config_.host, config_.port));
    return port_;
}

void HttpServer::serve() { server_->listen_after_bind(); }

int HttpServer::start() {
    const int port = bind();
    thread_ = std::thread([this] { serve(); });
    server_->wait_until_ready();
    return port;
}

void HttpServer::stop() {
    server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace peerloop::service
