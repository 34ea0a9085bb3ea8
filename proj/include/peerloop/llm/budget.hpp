#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace peerloop::llm {

/// Approximate token budget. Tokens are estimated as ceil(code points / 4).
class TokenBudget {
public:
    explicit TokenBudget(std::size_t limit);
    std::size_t limit() const noexcept { return limit_; }

private:
    std::size_t limit_;
};

std::size_t estimate_tokens(std::string_view text);

/// Longest prefix whose estimate fits the budget, cut back to the last
/// whitespace boundary when the text had to be shortened.
std::string truncate_to_budget(std::string_view text, TokenBudget budget);

}  // namespace peerloop::llm
