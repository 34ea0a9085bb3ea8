#include "peerloop/llm/json_extract.hpp"

#include <cctype>
#include <string>

namespace peerloop::llm {

namespace {

std::optional<nlohmann::json> parse_strict(std::string_view s) {
    auto doc = nlohmann::json::parse(s.begin(), s.end(), nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !(doc.is_object() || doc.is_array())) return std::nullopt;
    return doc;
}

std::optional<nlohmann::json> try_parse(std::string_view s) {
    if (auto doc = parse_strict(s)) return doc;
    auto repaired = repair_json(s);
    if (repaired == s) return std::nullopt;
    return parse_strict(repaired);
}

// End index (inclusive) of the object starting at `open`, honouring strings.
std::optional<std::size_t> matching_brace(std::string_view s, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) return i;
    }
    return std::nullopt;
}

}  // namespace

std::string repair_json(std::string_view s) {
    // Pass 1: drop bare "..." / U+2026 placeholders outside strings.
    std::string out;
    out.reserve(s.size());
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            out += c;
            if (c == '\\' && i + 1 < s.size()) out += s[++i];
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (s.compare(i, 3, "...") == 0) {
            i += 2;
            while (i + 1 < s.size() && s[i + 1] == '.') ++i;
            continue;
        } else if (s.compare(i, 3, "\xE2\x80\xA6") == 0) {
            i += 2;
            continue;
        }
        out += c;
    }

    // Pass 2: drop commas that are followed only by whitespace and a closer,
    // and commas left dangling after an opener.
    std::string cleaned;
    cleaned.reserve(out.size());
    in_string = false;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const char c = out[i];
        if (in_string) {
            cleaned += c;
            if (c == '\\' && i + 1 < out.size()) cleaned += out[++i];
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        if (c == ',') {
            std::size_t j = i + 1;
            while (j < out.size() && std::isspace(static_cast<unsigned char>(out[j]))) ++j;
            if (j < out.size() && (out[j] == ']' || out[j] == '}' || out[j] == ',')) continue;
            std::size_t k = cleaned.size();
            while (k > 0 && std::isspace(static_cast<unsigned char>(cleaned[k - 1]))) --k;
            if (k > 0 && (cleaned[k - 1] == '[' || cleaned[k - 1] == '{')) continue;
        }
        cleaned += c;
    }
    return cleaned;
}

std::optional<nlohmann::json> extract_json(std::string_view reply) {
    if (auto doc = try_parse(reply)) return doc;

    std::size_t pos = 0;
    while ((pos = reply.find("```", pos)) != std::string_view::npos) {
        auto body_start = reply.find('\n', pos);
        if (body_start == std::string_view::npos) break;
        auto close = reply.find("```", body_start);
        if (close == std::string_view::npos) break;
        if (auto doc = try_parse(reply.substr(body_start + 1, close - body_start - 1))) return doc;
        pos = close + 3;
    }

    for (std::size_t open = reply.find('{'); open != std::string_view::npos; open = reply.find('{', open + 1)) {
        if (auto end = matching_brace(reply, open)) {
            if (auto doc = try_parse(reply.substr(open, *end - open + 1))) return doc;
        }
    }
    return std::nullopt;
}

}  // namespace peerloop::llm
