#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "peerloop/guard/pdf.hpp"

namespace peerloop::guard {

struct Rgb {
    double r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

inline constexpr Rgb kWhite{1, 1, 1};
inline constexpr Rgb kBlack{0, 0, 0};

/// Euclidean distance in RGB scaled to [0, 1].
double color_distance(const Rgb& a, const Rgb& b);

struct BBox {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() > 0 && height() > 0 ? width() * height() : 0.0; }
    bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
    BBox unite(const BBox& o) const;
    double overlap_area(const BBox& o) const;
};

namespace encoding {
inline constexpr unsigned kZeroWidth = 1u << 0;
inline constexpr unsigned kConfusable = 1u << 1;
inline constexpr unsigned kBidiControl = 1u << 2;
inline constexpr unsigned kUnmapped = 1u << 3;
}  // namespace encoding

struct TextSpan {
    std::string text;  // UTF-8
    int page = 0;      // zero-based
    BBox bbox;
    double font_size = 0;  // effective size in points after all transforms
    Rgb color;
    unsigned encoding_flags = 0;
    int render_mode = 0;
    bool off_page = false;
    bool occluded = false;
    /// Colour under the span; empty when the span sits on an image.
    std::optional<Rgb> local_background = kWhite;
    std::size_t sequence = 0;  // paint order within the page
};

struct ExtractedDocument {
    std::vector<TextSpan> spans;  // reading order per page, pages ascending
    std::map<std::string, std::string> metadata;
    std::vector<Rgb> page_backgrounds;
    std::vector<BBox> page_boxes;
    std::vector<std::string> warnings;

    std::string full_text() const;
};

bool is_zero_width(char32_t cp);
std::size_t count_zero_width(std::string_view utf8);
/// A word that mixes Latin with Cyrillic or Greek letters, or uses
/// full-width or mathematical alphanumerics.
bool has_confusables(std::string_view utf8);
unsigned encoding_flags_of(std::string_view utf8);

ExtractedDocument extract(const pdf::Document& doc);
/// Parses then extracts. Throws kMalformedPdf / kEncryptedPdf.
ExtractedDocument extract(std::string bytes);
/// Plain-text submissions: one span per non-empty line, black on white.
ExtractedDocument extract_plain_text(std::string_view text);

}  // namespace peerloop::guard
