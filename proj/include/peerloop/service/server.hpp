#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "peerloop/service/api.hpp"

namespace httplib {
class Server;
}

namespace peerloop::service {

/// Token bucket per client key.
class RateLimiter {
public:
    explicit RateLimiter(int per_minute) : per_minute_(per_minute) {}

    /// False when the client has exhausted its budget at `now`.
    bool allow(const std::string& key, std::chrono::steady_clock::time_point now = std::chrono::steady_clock::now());

private:
    struct Bucket {
        double tokens;
        std::chrono::steady_clock::time_point last;
    };

    int per_minute_;
    std::mutex mutex_;
    std::map<std::string, Bucket> buckets_;
};

inline constexpr const char* kApiKeyHeader = "X-API-Key";

/// REST routes plus the tool manifest over cpp-httplib.
class HttpServer {
public:
    HttpServer(Api& api, const ServiceConfig& config);
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds the configured address (port 0 picks a free port); returns the port.
    int bind();
    /// Serves until stop(); blocking.
    void serve();
    /// bind() then serve() on a background thread.
    int start();
    void stop();

private:
    void routes();

    Api& api_;
    const ServiceConfig& config_;
    std::unique_ptr<httplib::Server> server_;
    RateLimiter limiter_;
    std::thread thread_;
    int port_ = -1;
};

}  // namespace peerloop::service
