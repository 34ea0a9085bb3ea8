#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace peerloop::llm {

/// Pulls the JSON document out of a model reply: the whole reply if it
/// parses, else the first fenced code block that parses, else the first
/// balanced {...} span that parses.
/// Candidates that fail to parse are retried after repair_json.
std::optional<nlohmann::json> extract_json(std::string_view reply);

/// Removes bare "..." placeholders and trailing commas outside string literals.
std::string repair_json(std::string_view text);

}  // namespace peerloop::llm
