#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "peerloop/common/clock.hpp"
#include "peerloop/llm/budget.hpp"
#include "peerloop/net/http.hpp"

namespace peerloop::lit {

struct RelatedPaper {
    std::string title;
    std::string abstract;
    int year = 0;
    std::string venue;
    long long citation_count = 0;
};

void to_json(nlohmann::json& j, const RelatedPaper& p);
void from_json(const nlohmann::json& j, RelatedPaper& p);

struct LiteratureBlock {
    std::string text;
    std::size_t source_count = 0;
};

/// Search backend. Implementations throw Error(kSearchUnavailable) when the
/// service cannot answer.
class SearchClient {
public:
    virtual ~SearchClient() = default;
    virtual std::vector<RelatedPaper> search(const std::string& query, std::size_t k) = 0;
};

/// Offline corpus. Entries may carry "tags"; a tagged entry is returned only
/// when one of its tags occurs in the query, untagged entries always match.
/// Results keep corpus order.
class FixtureSearch final : public SearchClient {
public:
    explicit FixtureSearch(const std::filesystem::path& corpus_file);
    explicit FixtureSearch(nlohmann::json corpus);

    std::vector<RelatedPaper> search(const std::string& query, std::size_t k) override;

private:
    struct Entry {
        RelatedPaper paper;
        std::vector<std::string> tags;
    };
    std::vector<Entry> entries_;
};

struct ScholarConfig {
    std::string base_url = "https://api.semanticscholar.org";
    std::string path = "/graph/v1/paper/search";
    std::string api_key_header = "x-api-key";
    std::string api_key;
};

/// Semantic Scholar-compatible paper search over HTTP.
class ScholarSearch final : public SearchClient {
public:
    ScholarSearch(ScholarConfig config, std::shared_ptr<net::HttpTransport> transport);
    std::vector<RelatedPaper> search(const std::string& query, std::size_t k) override;

    std::string request_url(const std::string& query, std::size_t k) const;

private:
    ScholarConfig config_;
    std::shared_ptr<net::HttpTransport> transport_;
};

/// Memoizes results per (query, k) for `ttl`.
class CachedSearch final : public SearchClient {
public:
    CachedSearch(std::shared_ptr<SearchClient> inner, const Clock& clock, std::chrono::milliseconds ttl);
    std::vector<RelatedPaper> search(const std::string& query, std::size_t k) override;

private:
    struct Slot {
        Timestamp stored_at;
        std::vector<RelatedPaper> papers;
    };
    std::shared_ptr<SearchClient> inner_;
    const Clock& clock_;
    std::chrono::milliseconds ttl_;
    std::mutex mutex_;
    std::map<std::string, Slot> cache_;
};

/// First non-empty line of the document plus its most frequent non-stopword terms.
std::string build_query(std::string_view document_text, std::size_t keyword_count = 5);

/// At most `k` related papers for the document. Throws kInvalidArgument for k == 0.
std::vector<RelatedPaper> search_related(SearchClient& client, std::string_view document_text, std::size_t k);

/// Numbered "Title (Year, Venue, N citations): abstract" entries. Whole
/// entries are dropped from the tail until the block fits the budget.
LiteratureBlock format_literature_block(const std::vector<RelatedPaper>& papers, llm::TokenBudget budget);

struct LiteratureResult {
    LiteratureBlock block;
    bool requested = false;
    std::string error;  // non-empty when retrieval failed and the caller degraded
};

/// Retrieves and formats literature for a document. With `degrade`, search
/// failures yield an empty block plus the error text instead of throwing.
/// A null client counts as an unavailable service.
LiteratureResult gather_literature(SearchClient* client, std::string_view document_text, std::size_t k,
                                   llm::TokenBudget budget, bool degrade);

void to_json(nlohmann::json& j, const LiteratureResult& r);

}  // namespace peerloop::lit
