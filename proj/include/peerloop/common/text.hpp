#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace peerloop::text {

/// Decodes UTF-8 leniently: malformed sequences become U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);
void append_utf8(std::string& out, char32_t cp);

std::size_t count_code_points(std::string_view s);

/// Byte offset of the first `n` code points (or s.size()).
std::size_t byte_offset_of(std::string_view s, std::size_t n);

bool is_space(char32_t cp);

std::string to_lower_ascii(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);

std::string base64_encode(std::string_view bytes);
/// Throws Error(kInvalidArgument) on malformed input.
std::string base64_decode(std::string_view encoded);

}  // namespace peerloop::text
