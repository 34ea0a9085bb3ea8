#include "peerloop/llm/budget.hpp"

#include "peerloop/common/error.hpp"
#include "peerloop/common/text.hpp"

namespace peerloop::llm {

TokenBudget::TokenBudget(std::size_t limit) : limit_(limit) {
    if (limit == 0) throw Error(ErrorCode::kInvalidArgument, "token budget must be positive");
}

std::size_t estimate_tokens(std::string_view text) { return (text::count_code_points(text) + 3) / 4; }

std::string truncate_to_budget(std::string_view text, TokenBudget budget) {
    const std::size_t max_chars = budget.limit() * 4;
    if (text::count_code_points(text) <= max_chars) return std::string(text);

    const std::size_t cut = text::byte_offset_of(text, max_chars);
    const std::string_view head = text.substr(0, cut);
    // Walk back to the last whitespace code point inside the allowed prefix.
    const auto cps = text::decode_utf8(head);
    std::size_t keep = cps.size();
    while (keep > 0 && !text::is_space(cps[keep - 1])) --keep;
    if (keep == 0) return std::string(head);  // a single overlong word: hard cut
    while (keep > 0 && text::is_space(cps[keep - 1])) --keep;
    return std::string(text.substr(0, text::byte_offset_of(text, keep)));
}

}  // namespace peerloop::llm
