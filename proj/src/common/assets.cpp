#include "peerloop/common/assets.hpp"

#include "peerloop/common/error.hpp"

namespace peerloop::assets {

std::optional<std::string_view> find(std::string_view path) {
    const auto& t = detail::table();
    auto it = t.find(path);
    if (it == t.end()) return std::nullopt;
    return it->second;
}

std::string_view get(std::string_view path) {
    if (auto a = find(path)) return *a;
    throw Error(ErrorCode::kConfig, "missing built-in asset: " + std::string(path));
}

std::vector<std::string> list(std::string_view prefix) {
    std::vector<std::string> out;
    for (const auto& [k, v] : detail::table())
        if (k.substr(0, prefix.size()) == prefix) out.emplace_back(k);
    return out;
}

}  // namespace peerloop::assets
