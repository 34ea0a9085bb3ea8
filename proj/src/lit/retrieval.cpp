#include "peerloop/lit/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "peerloop/common/error.hpp"
#include "peerloop/common/text.hpp"

namespace peerloop::lit {

using nlohmann::json;

void to_json(json& j, const RelatedPaper& p) {
    j = json{{"title", p.title},
             {"abstract", p.abstract},
             {"year", p.year},
             {"venue", p.venue},
             {"citation_count", p.citation_count}};
}

void from_json(const json& j, RelatedPaper& p) {
    p.title = j.at("title").get<std::string>();
    p.abstract = j.value("abstract", "");
    p.year = j.value("year", 0);
    p.venue = j.value("venue", "");
    p.citation_count = j.value("citation_count", 0LL);
}

// Fixture ---------------------------------------------------------------------

FixtureSearch::FixtureSearch(const std::filesystem::path& corpus_file) {
    std::ifstream in(corpus_file);
    if (!in) throw Error(ErrorCode::kConfig, "literature fixture not found: " + corpus_file.string());
    *this = FixtureSearch(json::parse(in));
}

FixtureSearch::FixtureSearch(json corpus) {
    const json& papers = corpus.is_object() ? corpus.at("papers") : corpus;
    for (const auto& p : papers) {
        Entry e{p.get<RelatedPaper>(), {}};
        if (e.paper.title.empty()) throw Error(ErrorCode::kConfig, "fixture paper without title");
        for (const auto& t : p.value("tags", json::array())) e.tags.push_back(text::to_lower_ascii(t.get<std::string>()));
        entries_.push_back(std::move(e));
    }
}

std::vector<RelatedPaper> FixtureSearch::search(const std::string& query, std::size_t k) {
    const auto q = text::to_lower_ascii(query);
    std::vector<RelatedPaper> out;
    for (const auto& e : entries_) {
        if (out.size() >= k) break;
        const bool match = e.tags.empty() || std::any_of(e.tags.begin(), e.tags.end(), [&](const std::string& t) {
                               return q.find(t) != std::string::npos;
                           });
        if (match) out.push_back(e.paper);
    }
    return out;
}

// Live ------------------------------------------------------------------------

ScholarSearch::ScholarSearch(ScholarConfig config, std::shared_ptr<net::HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {}

std::string ScholarSearch::request_url(const std::string& query, std::size_t k) const {
    return fmt::format("{}{}?query={}&limit={}&fields=title,abstract,year,venue,citationCount", config_.base_url,
                       config_.path, net::url_encode(query), k);
}

std::vector<RelatedPaper> ScholarSearch::search(const std::string& query, std::size_t k) {
    net::HttpRequest req{"GET", request_url(query, k), {}, {}};
    if (!config_.api_key.empty()) req.headers.emplace_back(config_.api_key_header, config_.api_key);
    net::HttpResponse res;
    try {
        res = transport_->send(req);
    } catch (const net::TransportError& e) {
        throw Error(ErrorCode::kSearchUnavailable, e.what());
    }
    if (res.status != 200)
        throw Error(ErrorCode::kSearchUnavailable, fmt::format("search service returned HTTP {}", res.status));
    auto doc = json::parse(res.body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("data"))
        throw Error(ErrorCode::kSearchUnavailable, "search service returned an unexpected payload");

    std::vector<RelatedPaper> out;
    for (const auto& item : doc["data"]) {
        if (out.size() >= k) break;
        RelatedPaper p;
        p.title = item.value("title", "");
        if (p.title.empty()) continue;
        if (item.contains("abstract") && item["abstract"].is_string()) p.abstract = item["abstract"];
        if (item.contains("year") && item["year"].is_number_integer()) p.year = item["year"];
        if (item.contains("venue") && item["venue"].is_string()) p.venue = item["venue"];
        if (item.contains("citationCount") && item["citationCount"].is_number_integer())
            p.citation_count = item["citationCount"];
        out.push_back(std::move(p));
    }
    return out;
}

// Cache -----------------------------------------------------------------------

CachedSearch::CachedSearch(std::shared_ptr<SearchClient> inner, const Clock& clock, std::chrono::milliseconds ttl)
    : inner_(std::move(inner)), clock_(clock), ttl_(ttl) {}

std::vector<RelatedPaper> CachedSearch::search(const std::string& query, std::size_t k) {
    const auto key = fmt::format("{}\n{}", k, query);
    {
        std::lock_guard lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end() && clock_.now() - it->second.stored_at < ttl_.count()) return it->second.papers;
    }
    auto papers = inner_->search(query, k);
    std::lock_guard lock(mutex_);
    cache_[key] = Slot{clock_.now(), papers};
    return papers;
}

// Query construction ----------------------------------------------------------

namespace {

const std::set<std::string>& stopwords() {
    static const std::set<std::string> k{
        "a",     "about", "above", "after",  "again", "all",   "also",   "an",    "and",   "any",   "are",
        "as",    "at",    "be",    "been",   "being", "both",  "but",    "by",    "can",   "could", "did",
        "do",    "does",  "each",  "for",    "from",  "had",   "has",    "have",  "how",   "if",    "in",
        "into",  "is",    "it",    "its",    "may",   "more",  "most",   "not",   "of",    "on",    "one",
        "or",    "other", "our",   "over",   "paper", "such",  "than",   "that",  "the",   "their", "them",
        "then",  "there", "these", "they",   "this",  "those", "through", "to",   "two",   "under", "use",
        "used",  "using", "very",  "was",    "we",    "were",  "what",   "when",  "where", "which", "while",
        "who",   "will",  "with",  "within", "would", "you",   "your",   "propose", "proposal", "show", "results",
        "approach", "method", "methods", "work", "new", "based", "however", "between", "first", "second"};
    return k;
}

std::string title_line(std::string_view doc) {
    for (const auto& line : text::split_lines(doc)) {
        auto t = text::trim(line);
        while (!t.empty() && (t.front() == '#' || t.front() == '*')) t.erase(t.begin());
        t = text::trim(t);
        if (!t.empty()) return t;
    }
    return {};
}

}  // namespace

std::string build_query(std::string_view document_text, std::size_t keyword_count) {
    const std::string title = title_line(document_text);
    const std::string lower_title = text::to_lower_ascii(title);

    std::unordered_map<std::string, std::size_t> freq;
    std::unordered_map<std::string, std::size_t> first_seen;
    std::string word;
    std::size_t position = 0;
    auto flush = [&] {
        if (word.size() >= 3 && !stopwords().count(word) && !std::isdigit(static_cast<unsigned char>(word[0]))) {
            ++freq[word];
            first_seen.emplace(word, position++);
        }
        word.clear();
    };
    for (char c : document_text) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc) || c == '-') word += static_cast<char>(std::tolower(uc));
        else flush();
    }
    flush();

    std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
    std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return first_seen[a.first] < first_seen[b.first];
    });

    std::string query = title;
    std::size_t added = 0;
    for (const auto& [w, n] : ranked) {
        if (added == keyword_count) break;
        if (!query.empty()) query += ' ';
        query += w;
        ++added;
    }
    return query;
}

std::vector<RelatedPaper> search_related(SearchClient& client, std::string_view document_text, std::size_t k) {
    if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
    auto papers = client.search(build_query(document_text), k);
    if (papers.size() > k) papers.resize(k);
    return papers;
}

LiteratureBlock format_literature_block(const std::vector<RelatedPaper>& papers, llm::TokenBudget budget) {
    const std::size_t max_chars = budget.limit() * 4;
    LiteratureBlock block;
    std::size_t chars = 0;
    for (std::size_t i = 0; i < papers.size(); ++i) {
        const auto& p = papers[i];
        const auto entry = fmt::format("{}{}. {} ({}, {}, {} citations): {}", i ? "\n" : "", i + 1, p.title, p.year,
                                       p.venue.empty() ? "unknown venue" : p.venue, p.citation_count, p.abstract);
        const auto n = text::count_code_points(entry);
        if (chars + n > max_chars) break;  // every later prefix is longer still
        chars += n;
        block.text += entry;
        ++block.source_count;
    }
    return block;
}

LiteratureResult gather_literature(SearchClient* client, std::string_view document_text, std::size_t k,
                                   llm::TokenBudget budget, bool degrade) {
    LiteratureResult r;
    r.requested = true;
    try {
        if (!client) throw Error(ErrorCode::kSearchUnavailable, "no literature search configured");
        r.block = format_literature_block(search_related(*client, document_text, k), budget);
    } catch (const Error& e) {
        if (!degrade || e.code() != ErrorCode::kSearchUnavailable) throw;
        r.error = e.what();
    }
    return r;
}

void to_json(json& j, const LiteratureResult& r) {
    j = json{{"requested", r.requested}, {"sources", r.block.source_count}};
    if (!r.error.empty()) j["error"] = r.error;
}

}  // namespace peerloop::lit
