#include "peerloop/net/http.hpp"

#include <fstream>

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "peerloop/common/error.hpp"

namespace peerloop::net {

namespace {

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // /path?query
};

ParsedUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "not an absolute URL: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string key_of(const HttpRequest& r) { return r.method + " " + r.url + "\n" + r.body; }

}  // namespace

HttpResponse HttplibTransport::send(const HttpRequest& request) {
    const auto [origin, path] = split_url(request.url);
    httplib::Client client(origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [k, v] : request.headers) {
        if (k == "Content-Type") content_type = v;
        else headers.emplace(k, v);
    }
    httplib::Result res = request.method == "POST"
                              ? client.Post(path, headers, request.body, content_type)
                              : client.Get(path, headers);
    if (!res) {
        const auto err = res.error();
        throw TransportError(fmt::format("{} {}: {}", request.method, request.url, httplib::to_string(err)),
                             err == httplib::Error::Read || err == httplib::Error::Write ||
                                 err == httplib::Error::ConnectionTimeout);
    }
    return HttpResponse{res->status, res->body};
}

CassetteTransport::CassetteTransport(std::filesystem::path file, Mode mode, std::shared_ptr<HttpTransport> inner)
    : file_(std::move(file)), mode_(mode), inner_(std::move(inner)) {
    if (mode_ == Mode::kRecord && !inner_)
        throw Error(ErrorCode::kInvalidArgument, "record mode needs an inner transport");
    std::ifstream in(file_);
    if (!in) {
        if (mode_ == Mode::kReplay) throw Error(ErrorCode::kIo, "cassette not found: " + file_.string());
        return;
    }
    const auto doc = nlohmann::json::parse(in);
    for (const auto& it : doc.at("interactions")) {
        HttpRequest req{it.at("request").at("method").get<std::string>(), it.at("request").at("url").get<std::string>(),
                        {}, it.at("request").value("body", "")};
        HttpResponse res{it.at("response").at("status").get<int>(), it.at("response").at("body").get<std::string>()};
        interactions_[key_of(req)] = res;
        order_.emplace_back(std::move(req), std::move(res));
    }
}

HttpResponse CassetteTransport::send(const HttpRequest& request) {
    {
        std::lock_guard lock(mutex_);
        auto it = interactions_.find(key_of(request));
        if (it != interactions_.end()) return it->second;
        if (mode_ == Mode::kReplay)
            throw TransportError("cassette has no recording for " + request.method + " " + request.url, false);
    }
    HttpResponse res = inner_->send(request);
    std::lock_guard lock(mutex_);
    HttpRequest stored{request.method, request.url, {}, request.body};
    interactions_[key_of(stored)] = res;
    order_.emplace_back(std::move(stored), res);
    save();
    return res;
}

std::size_t CassetteTransport::size() const {
    std::lock_guard lock(mutex_);
    return order_.size();
}

void CassetteTransport::save() const {
    nlohmann::json doc{{"version", 1}, {"interactions", nlohmann::json::array()}};
    for (const auto& [req, res] : order_) {
        doc["interactions"].push_back({{"request", {{"method", req.method}, {"url", req.url}, {"body", req.body}}},
                                       {"response", {{"status", res.status}, {"body", res.body}}}});
    }
    std::ofstream out(file_, std::ios::trunc);
    out << doc.dump(2) << '\n';
}

std::string url_encode(std::string_view s) {
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') out += static_cast<char>(c);
        else out += fmt::format("%{:02X}", c);
    }
    return out;
}

}  // namespace peerloop::net
