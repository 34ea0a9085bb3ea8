#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "peerloop/guard/scan.hpp"

namespace peerloop::guard {

struct DrawText {
    std::string text;
    double x = 72, y = 700, size = 10;
    Rgb color = kBlack;
    int render_mode = 0;
};

struct DrawRect {
    double x = 0, y = 0, w = 0, h = 0;
    Rgb color = kWhite;
};

using DrawItem = std::variant<DrawText, DrawRect>;

struct PageSpec {
    std::vector<DrawItem> items;  // painted in order
    double width = 612, height = 792;
};

/// Lays out text and filled rectangles. Text with non-Latin-1 characters uses
/// a Type0 font with a ToUnicode map; the rest uses Helvetica.
std::string render_pdf(const std::vector<PageSpec>& pages, const std::map<std::string, std::string>& info = {},
                       bool compress = false);

/// A small multi-page paper-like PDF with no hidden content. Deterministic in `seed`.
std::string generate_clean_pdf(std::uint64_t seed);

struct SynthesisInfo {
    AttackCategory category = AttackCategory::kWhiteText;
    std::string technique;
    std::string payload;
    int page = 0;
};

/// Appends an incremental update carrying one attack of `category` to
/// `clean_pdf`. The original bytes are kept, so every clean span survives.
/// Deterministic in (clean_pdf, category, seed). Throws kMalformedPdf,
/// kEncryptedPdf or kUnsupportedPdfStructure.
std::string synthesize_attack(const std::string& clean_pdf, AttackCategory category, std::uint64_t seed,
                              SynthesisInfo* info = nullptr);

/// Share of each category among attacks, in percent.
const std::map<AttackCategory, double>& attack_mix();

/// Splits `total` attacks across categories by largest remainder on the mix.
std::map<AttackCategory, std::size_t> apportion_attacks(std::size_t total);

/// floor(clean_count * rate).
std::size_t attack_count(std::size_t clean_count, double rate);

struct CorpusItem {
    std::string name;
    std::string bytes;
    std::optional<AttackCategory> category;  // empty for clean documents
    std::string source;                      // clean document an attack was built from
    std::uint64_t seed = 0;
    std::string technique;
};

/// Clean documents plus floor(n * rate) attacks built from them.
std::vector<CorpusItem> build_corpus(const std::vector<std::pair<std::string, std::string>>& clean, double attack_rate,
                                     std::uint64_t seed);

/// Reads every *.pdf in `clean_dir`, writes clean copies and attacks under
/// `out_dir` with a manifest.json, and returns the manifest.
nlohmann::json write_corpus(const std::filesystem::path& clean_dir, const std::filesystem::path& out_dir,
                            double attack_rate, std::uint64_t seed);

}  // namespace peerloop::guard
