#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "peerloop/guard/scan.hpp"

namespace peerloop::service {

struct BackendSpec {
    std::string type;  // "openai" | "anthropic" | "scripted"
    std::string base_url;
    std::string api_key_env;
    std::string fixtures_dir;  // scripted only
    std::vector<std::string> models;  // empty = default route
    int max_concurrency = 4;
};

struct LiteratureSpec {
    std::string provider = "none";  // "none" | "fixture" | "scholar"
    std::string fixture;
    std::string base_url = "https://api.semanticscholar.org";
    std::string api_key_env;
    std::size_t k = 5;
    long cache_ttl_seconds = 3600;
};

struct ModelAssignment {
    std::string reviewer = "gpt-4o";
    std::string planner = "gpt-4o";
    std::vector<std::string> sub_reviewers{"gpt-4o"};
    std::string summarizer = "gpt-4o";
};

struct Budgets {
    std::size_t proposal = 3000;
    std::size_t paper = 8000;
    std::size_t literature = 5000;
    std::size_t revision_context = 4000;
};

struct ReviewPolicy {
    bool auto_on_submit = true;
    std::string submit_mode = "single";
    bool auto_on_resubmit = true;
    std::string resubmit_mode = "meta";
    bool use_rag = false;
};

struct Limits {
    std::size_t max_body_bytes = 20u << 20;
    int requests_per_minute = 0;  // 0 disables rate limiting
    int workers = 4;
    std::size_t queue_capacity = 256;
    int feed_page_size = 10;
};

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string data_dir;  // empty = in-memory store
    std::uint64_t seed = 0;  // 0 = seeded from the clock
    std::optional<std::string> api_key;

    std::vector<std::string> panel{"gpt-4o", "claude-3-5-sonnet", "gemini-1.5-pro", "llama-3.1-70b",
                                   "mistral-large"};
    ModelAssignment models;
    Budgets budgets;
    ReviewPolicy review;
    Limits limits;
    guard::ScanConfig scan;
    std::map<std::string, std::string> standards;  // kind name -> YAML path
    std::string prompts_dir;
    LiteratureSpec literature;
    std::vector<BackendSpec> backends;
};

using Environment = std::map<std::string, std::string>;

/// Reads PEERLOOP_* variables from the process environment.
Environment process_environment();

/// Parses YAML, applies PEERLOOP_* overrides from `env`, then validates.
/// Throws Error(kConfig) on malformed input, invalid values or missing files.
ServiceConfig parse_config(std::string_view yaml, const Environment& env = {});
ServiceConfig load_config(const std::filesystem::path& file, const Environment& env = {});

void apply_environment(ServiceConfig& config, const Environment& env);
void validate(const ServiceConfig& config);

}  // namespace peerloop::service
