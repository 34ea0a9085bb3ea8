#include "peerloop/service/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "peerloop/common/error.hpp"
#include "peerloop/core/types.hpp"

extern char** environ;

namespace peerloop::service {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kEnvPrefix = "PEERLOOP_";

template <typename T>
void read(const YAML::Node& node, const char* key, T& out) {
    if (node && node[key]) out = node[key].as<T>();
}

void read_list(const YAML::Node& node, const char* key, std::vector<std::string>& out) {
    if (!node || !node[key]) return;
    out.clear();
    for (const auto& item : node[key]) out.push_back(item.as<std::string>());
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw Error(ErrorCode::kConfig, fmt::format("{}: expected a boolean, got '{}'", key, v));
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
    std::istringstream in(v);
    T out{};
    if (!(in >> out) || !in.eof())
        throw Error(ErrorCode::kConfig, fmt::format("{}: expected a number, got '{}'", key, v));
    return out;
}

void parse_review_mode(const std::string& mode, const char* what) {
    if (mode != "single" && mode != "meta")
        throw Error(ErrorCode::kConfig, fmt::format("{} must be 'single' or 'meta', got '{}'", what, mode));
}

void require_file(const std::string& path, const std::string& what) {
    if (path.empty()) return;
    if (!fs::exists(path)) throw Error(ErrorCode::kConfig, fmt::format("{} does not exist: {}", what, path));
}

}  // namespace

Environment process_environment() {
    Environment env;
    for (char** e = environ; e && *e; ++e) {
        std::string_view entry(*e);
        if (entry.substr(0, kEnvPrefix.size()) != kEnvPrefix) continue;
        const auto eq = entry.find('=');
        if (eq == std::string_view::npos) continue;
        env.emplace(std::string(entry.substr(0, eq)), std::string(entry.substr(eq + 1)));
    }
    return env;
}

ServiceConfig parse_config(std::string_view yaml, const Environment& env) {
    ServiceConfig c;
    try {
        const YAML::Node root = YAML::Load(std::string(yaml));
        if (root && !root.IsNull() && !root.IsMap()) throw Error(ErrorCode::kConfig, "config root must be a mapping");

        if (const auto n = root["listen"]) {
            read(n, "host", c.host);
            read(n, "port", c.port);
        }
        read(root, "data_dir", c.data_dir);
        read(root, "seed", c.seed);
        if (root["api_key"]) c.api_key = root["api_key"].as<std::string>();
        read(root, "prompts_dir", c.prompts_dir);
        read_list(root, "panel", c.panel);

        if (const auto n = root["models"]) {
            read(n, "reviewer", c.models.reviewer);
            read(n, "planner", c.models.planner);
            read_list(n, "sub_reviewers", c.models.sub_reviewers);
            read(n, "summarizer", c.models.summarizer);
        }
        if (const auto n = root["budgets"]) {
            read(n, "proposal", c.budgets.proposal);
            read(n, "paper", c.budgets.paper);
            read(n, "literature", c.budgets.literature);
            read(n, "revision_context", c.budgets.revision_context);
        }
        if (const auto n = root["review"]) {
            read(n, "auto_on_submit", c.review.auto_on_submit);
            read(n, "submit_mode", c.review.submit_mode);
            read(n, "auto_on_resubmit", c.review.auto_on_resubmit);
            read(n, "resubmit_mode", c.review.resubmit_mode);
            read(n, "use_rag", c.review.use_rag);
        }
        if (const auto n = root["limits"]) {
            read(n, "max_body_bytes", c.limits.max_body_bytes);
            read(n, "requests_per_minute", c.limits.requests_per_minute);
            read(n, "workers", c.limits.workers);
            read(n, "queue_capacity", c.limits.queue_capacity);
            read(n, "feed_page_size", c.limits.feed_page_size);
        }
        if (const auto n = root["scan"]) {
            read(n, "threshold", c.scan.threshold);
            read(n, "semantic", c.scan.run_semantic);
            read(n, "color_distance", c.scan.coarse.color_distance);
            read(n, "tiny_font_pt", c.scan.coarse.tiny_font_pt);
            read(n, "model", c.scan.semantic.model_id);
            if (const auto d = n["disabled_rules"]) {
                for (const auto& r : d) {
                    const auto name = r.as<std::string>();
                    const auto family = guard::rule_family_from_string(name);
                    if (!family) throw Error(ErrorCode::kConfig, "scan.disabled_rules: unknown rule " + name);
                    c.scan.coarse.disabled.insert(*family);
                }
            }
        }
        if (const auto n = root["standards"]) {
            for (const auto& kv : n) {
                const auto kind = core::kind_from_string(kv.first.as<std::string>());
                c.standards[std::string(core::to_string(kind))] = kv.second.as<std::string>();
            }
        }
        if (const auto n = root["literature"]) {
            read(n, "provider", c.literature.provider);
            read(n, "fixture", c.literature.fixture);
            read(n, "base_url", c.literature.base_url);
            read(n, "api_key_env", c.literature.api_key_env);
            read(n, "k", c.literature.k);
            read(n, "cache_ttl_seconds", c.literature.cache_ttl_seconds);
        }
        if (const auto n = root["backends"]) {
            for (const auto& b : n) {
                BackendSpec spec;
                read(b, "type", spec.type);
                read(b, "base_url", spec.base_url);
                read(b, "api_key_env", spec.api_key_env);
                read(b, "fixtures_dir", spec.fixtures_dir);
                read_list(b, "models", spec.models);
                read(b, "max_concurrency", spec.max_concurrency);
                c.backends.push_back(std::move(spec));
            }
        }
    } catch (const YAML::Exception& e) {
        throw Error(ErrorCode::kConfig, fmt::format("invalid config: {}", e.what()));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::kConfig) throw;
        throw Error(ErrorCode::kConfig, e.what());
    }
    apply_environment(c, env);
    validate(c);
    return c;
}

ServiceConfig load_config(const fs::path& file, const Environment& env) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(ErrorCode::kConfig, "cannot read config file " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), env);
}

void apply_environment(ServiceConfig& c, const Environment& env) {
    for (const auto& [key, value] : env) {
        if (key == "PEERLOOP_HOST") {
            c.host = value;
        } else if (key == "PEERLOOP_PORT") {
            c.port = parse_number<int>(key, value);
        } else if (key == "PEERLOOP_DATA_DIR") {
            c.data_dir = value;
        } else if (key == "PEERLOOP_SEED") {
            c.seed = parse_number<std::uint64_t>(key, value);
        } else if (key == "PEERLOOP_API_KEY") {
            c.api_key = value;
        } else if (key == "PEERLOOP_PROMPTS_DIR") {
            c.prompts_dir = value;
        } else if (key == "PEERLOOP_PANEL") {
            c.panel = split_list(value);
        } else if (key == "PEERLOOP_SCAN_THRESHOLD") {
            c.scan.threshold = parse_number<double>(key, value);
        } else if (key == "PEERLOOP_SCAN_SEMANTIC") {
            c.scan.run_semantic = parse_bool(key, value);
        } else if (key == "PEERLOOP_WORKERS") {
            c.limits.workers = parse_number<int>(key, value);
        } else if (key == "PEERLOOP_MAX_BODY_BYTES") {
            c.limits.max_body_bytes = parse_number<std::size_t>(key, value);
        } else if (key == "PEERLOOP_RATE_LIMIT") {
            c.limits.requests_per_minute = parse_number<int>(key, value);
        } else if (key == "PEERLOOP_AUTO_REVIEW") {
            c.review.auto_on_submit = c.review.auto_on_resubmit = parse_bool(key, value);
        } else if (key == "PEERLOOP_LITERATURE") {
            c.literature.provider = value;
        }
    }
}

void validate(const ServiceConfig& c) {
    if (c.port < 0 || c.port > 65535) throw Error(ErrorCode::kConfig, fmt::format("port out of range: {}", c.port));
    if (c.panel.size() != 5) throw Error(ErrorCode::kConfig, fmt::format("panel needs 5 models, got {}", c.panel.size()));
    if (std::set<std::string>(c.panel.begin(), c.panel.end()).size() != c.panel.size())
        throw Error(ErrorCode::kConfig, "panel models must be distinct");
    if (c.models.sub_reviewers.empty()) throw Error(ErrorCode::kConfig, "models.sub_reviewers must not be empty");
    if (c.budgets.proposal == 0 || c.budgets.paper == 0 || c.budgets.literature == 0)
        throw Error(ErrorCode::kConfig, "token budgets must be positive");
    parse_review_mode(c.review.submit_mode, "review.submit_mode");
    parse_review_mode(c.review.resubmit_mode, "review.resubmit_mode");
    if (c.limits.workers < 1) throw Error(ErrorCode::kConfig, "limits.workers must be at least 1");
    if (c.limits.queue_capacity == 0) throw Error(ErrorCode::kConfig, "limits.queue_capacity must be positive");
    if (c.limits.feed_page_size < 1) throw Error(ErrorCode::kConfig, "limits.feed_page_size must be positive");
    if (c.limits.max_body_bytes == 0) throw Error(ErrorCode::kConfig, "limits.max_body_bytes must be positive");
    if (c.limits.requests_per_minute < 0) throw Error(ErrorCode::kConfig, "limits.requests_per_minute is negative");
    if (c.scan.threshold <= 0) throw Error(ErrorCode::kConfig, "scan.threshold must be positive");

    for (const auto& [kind, path] : c.standards) {
        try {
            core::kind_from_string(kind);
        } catch (const Error&) {
            throw Error(ErrorCode::kConfig, "standards: unknown kind " + kind);
        }
        require_file(path, "review standard");
    }
    if (!c.prompts_dir.empty() && !fs::is_directory(c.prompts_dir))
        throw Error(ErrorCode::kConfig, "prompts_dir is not a directory: " + c.prompts_dir);

    const auto& lit = c.literature;
    if (lit.provider != "none" && lit.provider != "fixture" && lit.provider != "scholar")
        throw Error(ErrorCode::kConfig, "literature.provider must be none, fixture or scholar");
    if (lit.provider == "fixture") {
        if (lit.fixture.empty()) throw Error(ErrorCode::kConfig, "literature.fixture is required");
        require_file(lit.fixture, "literature fixture");
    }
    if (lit.k == 0) throw Error(ErrorCode::kConfig, "literature.k must be positive");

    for (const auto& b : c.backends) {
        if (b.type != "openai" && b.type != "anthropic" && b.type != "scripted")
            throw Error(ErrorCode::kConfig, "unknown backend type: " + b.type);
        if (b.type != "scripted" && b.base_url.empty())
            throw Error(ErrorCode::kConfig, b.type + " backend needs base_url");
        if (b.type == "scripted" && !b.fixtures_dir.empty() && !fs::is_directory(b.fixtures_dir))
            throw Error(ErrorCode::kConfig, "fixtures_dir is not a directory: " + b.fixtures_dir);
        if (b.max_concurrency < 1) throw Error(ErrorCode::kConfig, "backend max_concurrency must be at least 1");
    }
}

}  // namespace peerloop::service
