#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace peerloop::net {

struct HttpRequest {
    std::string method = "GET";
    std::string url;  // absolute: scheme://host[:port]/path[?query]
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// Thrown by transports when no response was obtained at all.
struct TransportError : std::runtime_error {
    TransportError(const std::string& what, bool timed_out) : std::runtime_error(what), timed_out(timed_out) {}
    bool timed_out;
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse send(const HttpRequest& request) = 0;
};

/// Real network transport (cpp-httplib; https when built with OpenSSL).
class HttplibTransport final : public HttpTransport {
public:
    explicit HttplibTransport(std::chrono::milliseconds timeout = std::chrono::seconds(60)) : timeout_(timeout) {}
    HttpResponse send(const HttpRequest& request) override;

private:
    std::chrono::milliseconds timeout_;
};

/// Record/replay transport. Interactions are matched on (method, url, body);
/// headers are never recorded so credentials stay out of cassette files.
class CassetteTransport final : public HttpTransport {
public:
    enum class Mode { kReplay, kRecord };

    CassetteTransport(std::filesystem::path file, Mode mode, std::shared_ptr<HttpTransport> inner = nullptr);
    HttpResponse send(const HttpRequest& request) override;

    std::size_t size() const;

private:
    void save() const;

    std::filesystem::path file_;
    Mode mode_;
    std::shared_ptr<HttpTransport> inner_;
    mutable std::mutex mutex_;
    std::map<std::string, HttpResponse> interactions_;
    std::vector<std::pair<HttpRequest, HttpResponse>> order_;
};

std::string url_encode(std::string_view s);

}  // namespace peerloop::net
