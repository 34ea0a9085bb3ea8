#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace peerloop::assets {

/// Asset compiled into the binary, keyed by path relative to assets/
/// (e.g. "prompts/review_paper.txt").
std::optional<std::string_view> find(std::string_view path);

/// Throws Error(kConfig) when the asset does not exist.
std::string_view get(std::string_view path);

std::vector<std::string> list(std::string_view prefix);

namespace detail {
const std::map<std::string_view, std::string_view>& table();
}

}  // namespace peerloop::assets
