#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "peerloop/guard/extract.hpp"
#include "peerloop/llm/gateway.hpp"
#include "peerloop/llm/prompt.hpp"

namespace peerloop::guard {

enum class AttackCategory { kWhiteText, kMetadata, kInvisibleChars, kMixedLanguage, kSteganographic, kContextual };

inline constexpr std::array<AttackCategory, 6> kAllCategories = {
    AttackCategory::kWhiteText,     AttackCategory::kMetadata,       AttackCategory::kInvisibleChars,
    AttackCategory::kMixedLanguage, AttackCategory::kSteganographic, AttackCategory::kContextual};

std::string_view to_string(AttackCategory c);
/// Accepts the names produced by to_string and the two-letter codes (WT, MD, IC, ML, SG, CA).
std::optional<AttackCategory> category_from_string(std::string_view s);

enum class Severity { kLow, kMedium, kHigh };
std::string_view to_string(Severity s);
/// 1, 3 and 9.
double severity_weight(Severity s);

enum class Stage { kCoarse, kSemantic };
std::string_view to_string(Stage s);

enum class RuleFamily { kKeyword, kColor, kTinyFont, kInvisibleChars, kMetadata, kConcealed, kSemantic };
std::string_view to_string(RuleFamily f);
std::optional<RuleFamily> rule_family_from_string(std::string_view s);

/// How the text carrying an anomaly was presented.
struct SpanTraits {
    bool near_background = false;
    bool tiny = false;
    bool concealed = false;  // off-page, invisible render mode or painted over
    bool zero_width = false;
    bool confusable = false;
    bool url_encoded = false;
    bool foreign_language = false;
    bool in_metadata = false;
    bool operator==(const SpanTraits&) const = default;
};

/// Category of an anomaly from the rule that fired and the carrier's traits.
AttackCategory classify(RuleFamily family, const SpanTraits& traits);

struct Location {
    int page = -1;  // zero-based; -1 for metadata
    std::optional<BBox> bbox;
    std::string metadata_key;
    bool invisible_region = false;
};

struct Anomaly {
    AttackCategory category_hint = AttackCategory::kContextual;
    Severity severity = Severity::kLow;
    Location location;
    std::string evidence;
    Stage stage = Stage::kCoarse;
    RuleFamily family = RuleFamily::kKeyword;
    SpanTraits traits;
    std::size_t count = 1;
    bool lexicon = false;    // raised by a lexicon match
    bool confirmed = false;  // the semantic stage agreed
    std::string passage;     // full carrier text, used for semantic checks
    std::string note;
};

/// Consecutive spans on one page that share presentation; rules run on runs so
/// payloads split across text operators are still seen whole.
struct TextRun {
    int page = 0;
    std::string text;
    BBox bbox;
    double font_size = 0;
    Rgb color;
    SpanTraits traits;
    std::vector<std::size_t> spans;
};

struct CoarseOptions {
    double color_distance = 0.05;
    double tiny_font_pt = 2.0;
    std::set<RuleFamily> disabled;
};

std::vector<TextRun> build_runs(const ExtractedDocument& doc, const CoarseOptions& options = {});

/// Deterministic rule pass. Families run concurrently; output order is fixed.
std::vector<Anomaly> coarse_scan(const ExtractedDocument& doc, const CoarseOptions& options = {});

struct SemanticOptions {
    std::string model_id = "gpt-4o";
    std::size_t max_candidates = 32;
    std::size_t context_chars = 1200;
};

struct SemanticResult {
    std::vector<Anomaly> anomalies;
    bool degraded = false;
    std::vector<std::string> errors;
    std::size_t calls = 0;
};

/// Checks coarse candidates with a model, samples reviewer-directed passages
/// the rules missed and rescans translations of other-language passages.
SemanticResult semantic_verify(const ExtractedDocument& doc, std::vector<Anomaly> candidates, llm::Gateway& gateway,
                               const llm::PromptLibrary& prompts, const SemanticOptions& options = {},
                               const CoarseOptions& coarse = {});

std::set<AttackCategory> categorize(const std::vector<Anomaly>& anomalies);

struct RiskWeights {
    std::map<AttackCategory, double> category = {
        {AttackCategory::kWhiteText, 6},     {AttackCategory::kMetadata, 5},
        {AttackCategory::kInvisibleChars, 4}, {AttackCategory::kMixedLanguage, 3},
        {AttackCategory::kSteganographic, 2}, {AttackCategory::kContextual, 1}};
    double hidden_location = 1.5;  // metadata or an invisible region
    double visible_location = 1.0;
};

double location_weight(const Anomaly& a, const RiskWeights& w = {});
double risk_score(const std::vector<Anomaly>& anomalies, const RiskWeights& w = {});

inline constexpr double kDefaultThreshold = 9.0;
inline constexpr int kReportSchemaVersion = 1;

struct ScanConfig {
    CoarseOptions coarse;
    SemanticOptions semantic;
    RiskWeights weights;
    double threshold = kDefaultThreshold;
    bool run_semantic = true;
};

struct ScanReport {
    std::vector<Anomaly> anomalies;
    std::set<AttackCategory> categories;
    double risk_score = 0;
    double threshold = kDefaultThreshold;
    bool flagged = false;
    bool semantic_ran = false;
    bool semantic_degraded = false;
    std::vector<std::string> semantic_errors;
    std::vector<std::string> warnings;
};

nlohmann::json to_json(const Anomaly& a);
nlohmann::json to_json(const ScanReport& r);

/// Coarse scan, optional semantic pass, categorization and scoring.
class Scanner {
public:
    /// `gateway` may be null, which skips the semantic stage.
    Scanner(llm::Gateway* gateway, const llm::PromptLibrary& prompts, ScanConfig config = {});

    ScanReport scan(const ExtractedDocument& doc) const;
    /// Throws kMalformedPdf / kEncryptedPdf.
    ScanReport scan_pdf(std::string bytes) const;
    ScanReport scan_text(std::string_view body) const;

    const ScanConfig& config() const { return config_; }

private:
    llm::Gateway* gateway_;
    const llm::PromptLibrary& prompts_;
    ScanConfig config_;
};

}  // namespace peerloop::guard
