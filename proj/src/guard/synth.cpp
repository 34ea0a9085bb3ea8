#include "peerloop/guard/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "peerloop/common/error.hpp"
#include "peerloop/common/ids.hpp"
#include "peerloop/common/text.hpp"
#include "peerloop/guard/lexicon.hpp"

namespace peerloop::guard {

namespace {

using pdf::Array;
using pdf::Dict;
using pdf::Name;
using pdf::Object;
using pdf::Ref;

struct Rng {
    std::uint64_t state;
    std::uint64_t next() { return state = splitmix64(state); }
    std::size_t pick(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(next() % n); }
};

Object stream_object(std::string data, bool compress, Dict dict = {}) {
    auto s = std::make_shared<pdf::Stream>();
    if (compress) {
        s->data = pdf::flate_compress(data);
        dict["Filter"] = Object(Name{"FlateDecode"});
    } else {
        s->data = std::move(data);
    }
    s->dict = std::move(dict);
    return Object(s);
}

Dict helvetica(const char* base) {
    return Dict{{"Type", Object(Name{"Font"})},
                {"Subtype", Object(Name{"Type1"})},
                {"BaseFont", Object(Name{base})},
                {"Encoding", Object(Name{"WinAnsiEncoding"})}};
}

std::vector<std::string> wrap(std::string_view s, std::size_t width) {
    std::vector<std::string> lines;
    std::string line;
    std::size_t line_cp = 0;
    std::istringstream in{std::string(s)};
    std::string word;
    while (in >> word) {
        const std::size_t wcp = text::count_code_points(word);
        if (!line.empty() && line_cp + 1 + wcp > width) {
            lines.push_back(line);
            line.clear();
            line_cp = 0;
        }
        if (!line.empty()) {
            line += ' ';
            ++line_cp;
        }
        line += word;
        line_cp += wcp;
    }
    if (!line.empty()) lines.push_back(line);
    return lines;
}

/// Text encoder for one font resource.
struct FontPlan {
    bool unicode = false;
    std::map<char32_t, int> cids;

    std::string show(std::string_view utf8) const {
        if (!unicode) {
            std::string bytes;
            for (char32_t cp : text::decode_utf8(utf8)) bytes += cp < 0x100 ? static_cast<char>(cp) : '?';
            return "(" + pdf::escape_literal(bytes) + ")";
        }
        std::string hex = "<";
        for (char32_t cp : text::decode_utf8(utf8)) hex += fmt::format("{:04X}", cids.at(cp));
        return hex + ">";
    }
    double width(char32_t cp) const {
        if (!unicode) return 500;
        if (is_zero_width(cp)) return 0;
        return cp >= 0x2E80 ? 1000 : 500;
    }
};

template <typename Sink>
int add_unicode_font(Sink& sink, const std::set<char32_t>& chars, FontPlan& plan) {
    plan.unicode = true;
    int cid = 1;
    for (char32_t cp : chars) plan.cids[cp] = cid++;
    std::string cmap =
        "/CIDInit /ProcSet findresource begin\n12 dict begin\nbegincmap\n"
        "/CIDSystemInfo << /Registry (Adobe) /Ordering (UCS) /Supplement 0 >> def\n"
        "/CMapName /Adobe-Identity-UCS def\n/CMapType 2 def\n"
        "1 begincodespacerange\n<0000> <FFFF>\nendcodespacerange\n";
    std::vector<std::pair<int, char32_t>> entries;
    for (const auto& [cp, c] : plan.cids) entries.emplace_back(c, cp);
    for (std::size_t i = 0; i < entries.size(); i += 100) {
        const std::size_t n = std::min<std::size_t>(100, entries.size() - i);
        cmap += fmt::format("{} beginbfchar\n", n);
        for (std::size_t k = i; k < i + n; ++k) {
            std::string dst;
            const char32_t cp = entries[k].second;
            if (cp >= 0x10000) {
                const char32_t v = cp - 0x10000;
                dst = fmt::format("{:04X}{:04X}", 0xD800 + (v >> 10), 0xDC00 + (v & 0x3FF));
            } else {
                dst = fmt::format("{:04X}", static_cast<unsigned>(cp));
            }
            cmap += fmt::format("<{:04X}> <{}>\n", entries[k].first, dst);
        }
        cmap += "endbfchar\n";
    }
    cmap += "endcmap\nCMapName currentdict /defineresource pop\nend\nend\n";
    const int to_unicode = sink.add(stream_object(cmap, true));

    Array widths;
    for (const auto& [c, cp] : entries) {
        widths.push_back(Object(c));
        widths.push_back(Object(Array{Object(plan.width(cp))}));
    }
    Dict cidfont{{"Type", Object(Name{"Font"})},
                 {"Subtype", Object(Name{"CIDFontType2"})},
                 {"BaseFont", Object(Name{"PeerloopUnicode"})},
                 {"CIDSystemInfo", Object(Dict{{"Registry", Object(pdf::String{"Adobe"})},
                                               {"Ordering", Object(pdf::String{"Identity"})},
                                               {"Supplement", Object(0)}})},
                 {"DW", Object(1000)},
                 {"W", Object(std::move(widths))}};
    const int descendant = sink.add(Object(std::move(cidfont)));
    return sink.add(Object(Dict{{"Type", Object(Name{"Font"})},
                                {"Subtype", Object(Name{"Type0"})},
                                {"BaseFont", Object(Name{"PeerloopUnicode"})},
                                {"Encoding", Object(Name{"Identity-H"})},
                                {"DescendantFonts", Object(Array{Object(Ref{descendant, 0})})},
                                {"ToUnicode", Object(Ref{to_unicode, 0})}}));
}

// ---------------------------------------------------------------------------
// Clean documents

const std::vector<std::string> kSubjects = {"The proposed method", "Our approach",        "The baseline model",
                                            "This framework",      "The sparse encoder",  "The training procedure",
                                            "The ablation study",  "The hybrid estimator", "Each variant"};
const std::vector<std::string> kVerbs = {"improves",       "reduces",      "stabilizes", "extends", "simplifies",
                                         "characterizes", "accelerates", "regularizes"};
const std::vector<std::string> kObjects = {"the memory footprint of long sequences",
                                           "convergence on noisy benchmarks",
                                           "the variance of gradient estimates",
                                           "retrieval quality across domains",
                                           "inference latency on commodity hardware",
                                           "the calibration of predicted probabilities",
                                           "sample efficiency in sparse regimes",
                                           "the stability of adaptive optimizers"};
const std::vector<std::string> kTails = {"under a fixed compute budget.",     "without additional supervision.",
                                         "across five random seeds.",         "in both synthetic and real settings.",
                                         "when the context length grows.",    "compared with prior work.",
                                         "at a modest cost in wall-clock time.", "on all three datasets."};
const std::vector<std::string> kTitleA = {"Sparse", "Adaptive", "Calibrated", "Hierarchical", "Efficient", "Robust"};
const std::vector<std::string> kTitleB = {"Attention Kernels", "Gradient Estimators", "Retrieval Models",
                                          "Sequence Encoders", "Optimizers", "Mixture Layers"};
const std::vector<std::string> kTitleC = {"Long Documents", "Noisy Labels", "Scientific Text", "Low-Resource Settings",
                                          "Streaming Data", "Graph Benchmarks"};
const std::vector<std::string> kAuthors = {"A. Rivera", "M. Chen", "S. Okafor", "L. Novak", "P. Iyer", "K. Berg"};
const std::vector<std::string> kSections = {"Introduction", "Method", "Experiments", "Results", "Limitations",
                                            "Conclusion"};

std::string sentence(Rng& rng) {
    return kSubjects[rng.pick(kSubjects.size())] + " " + kVerbs[rng.pick(kVerbs.size())] + " " +
           kObjects[rng.pick(kObjects.size())] + " " + kTails[rng.pick(kTails.size())];
}

void text_line(std::string& c, const char* font, double size, double x, double y, const std::string& s) {
    c += fmt::format("BT /{} {} Tf {} {} Td ({}) Tj ET\n", font, size, x, y, pdf::escape_literal(s));
}

}  // namespace

std::string generate_clean_pdf(std::uint64_t seed) {
    Rng rng{seed * 0x9E3779B97F4A7C15ULL + 1};
    pdf::Builder b;
    const int catalog = b.reserve();
    const int pages_node = b.reserve();
    const int f1 = b.add(Object(helvetica("Helvetica")));
    const int f2 = b.add(Object(helvetica("Helvetica-Bold")));
    const Dict resources{{"Font", Object(Dict{{"F1", Object(Ref{f1, 0})}, {"F2", Object(Ref{f2, 0})}})}};
    const bool inherit = seed % 3 == 0;
    const bool compress = seed % 2 == 1;
    const std::size_t page_count = 1 + rng.pick(3);
    const std::string title = kTitleA[rng.pick(kTitleA.size())] + " " + kTitleB[rng.pick(kTitleB.size())] + " for " +
                              kTitleC[rng.pick(kTitleC.size())];
    const std::string authors = kAuthors[rng.pick(kAuthors.size())] + ", " + kAuthors[rng.pick(kAuthors.size())];

    Array kids;
    std::size_t section = 0;
    for (std::size_t p = 0; p < page_count; ++p) {
        std::string c;
        double y = 720;
        if (p == 0) {
            text_line(c, "F2", 16, 72, y, title);
            y -= 20;
            text_line(c, "F1", 10, 72, y, authors);
            y -= 30;
        }
        bool callout = seed % 4 == 1 && p + 1 == page_count;
        while (y > 170 && section < kSections.size() + 2 * page_count) {
            const std::string heading = fmt::format("{} {}", section + 1, kSections[section % kSections.size()]);
            if (p == 0 && section == 0 && seed % 2 == 0) {
                c += fmt::format("0.92 g 66 {} 480 16 re f 0 g\n", y - 4);
            }
            text_line(c, "F2", 11, 72, y, heading);
            y -= 18;
            ++section;
            std::string para;
            const std::size_t n = 3 + rng.pick(4);
            for (std::size_t k = 0; k < n; ++k) para += (k ? " " : "") + sentence(rng);
            for (const auto& line : wrap(para, 92)) {
                if (y < 130) break;
                text_line(c, "F1", 10, 72, y, line);
                y -= 13;
            }
            y -= 10;
            if (callout && y > 200) {
                c += fmt::format("0.1 0.2 0.4 rg 72 {} 468 30 re f\n", y - 26);
                c += fmt::format("1 1 1 rg BT /F2 10 Tf 80 {} Td (Key finding: {}) Tj ET 0 0 0 rg\n", y - 14,
                                 pdf::escape_literal(kObjects[rng.pick(kObjects.size())]));
                y -= 44;
                callout = false;
            }
        }
        text_line(c, "F1", 9, 300, 30, std::to_string(p + 1));
        const int content = b.add(stream_object(c, compress));
        Dict page{{"Type", Object(Name{"Page"})},
                  {"Parent", Object(Ref{pages_node, 0})},
                  {"Contents", Object(Ref{content, 0})}};
        if (!inherit) {
            page["Resources"] = Object(resources);
            page["MediaBox"] = Object(Array{Object(0), Object(0), Object(612), Object(792)});
        }
        kids.push_back(Object(Ref{b.add(Object(std::move(page))), 0}));
    }
    Dict pages{{"Type", Object(Name{"Pages"})},
               {"Kids", Object(kids)},
               {"Count", Object(static_cast<long long>(kids.size()))}};
    if (inherit) {
        pages["Resources"] = Object(resources);
        pages["MediaBox"] = Object(Array{Object(0), Object(0), Object(612), Object(792)});
    }
    b.set(pages_node, Object(std::move(pages)));
    b.set(catalog, Object(Dict{{"Type", Object(Name{"Catalog"})}, {"Pages", Object(Ref{pages_node, 0})}}));
    const int info = b.add(Object(Dict{{"Title", Object(pdf::encode_text_string(title))},
                                       {"Author", Object(pdf::encode_text_string(authors))},
                                       {"Producer", Object(pdf::String{"peerloop corpus generator"})}}));
    return b.finish(catalog, info);
}

std::string render_pdf(const std::vector<PageSpec>& pages, const std::map<std::string, std::string>& info,
                       bool compress) {
    pdf::Builder b;
    const int catalog = b.reserve();
    const int pages_node = b.reserve();
    const int helv = b.add(Object(helvetica("Helvetica")));
    std::set<char32_t> wide;
    for (const auto& page : pages) {
        for (const auto& item : page.items) {
            if (const auto* t = std::get_if<DrawText>(&item)) {
                for (char32_t cp : text::decode_utf8(t->text)) {
                    if (cp > 0xFF) wide.insert(cp);
                }
            }
        }
    }
    FontPlan latin;
    FontPlan unicode;
    std::optional<int> uni_font;
    if (!wide.empty()) {
        std::set<char32_t> all = wide;
        for (const auto& page : pages) {
            for (const auto& item : page.items) {
                if (const auto* t = std::get_if<DrawText>(&item)) {
                    for (char32_t cp : text::decode_utf8(t->text)) all.insert(cp);
                }
            }
        }
        uni_font = add_unicode_font(b, all, unicode);
    }
    Dict fonts{{"F1", Object(Ref{helv, 0})}};
    if (uni_font) fonts["F2"] = Object(Ref{*uni_font, 0});
    Array kids;
    for (const auto& page : pages) {
        std::string c;
        for (const auto& item : page.items) {
            if (const auto* t = std::get_if<DrawText>(&item)) {
                bool needs_unicode = false;
                for (char32_t cp : text::decode_utf8(t->text)) needs_unicode = needs_unicode || cp > 0xFF;
                const FontPlan& plan = needs_unicode ? unicode : latin;
                c += fmt::format("{:.3f} {:.3f} {:.3f} rg BT /{} {} Tf {} Tr {} {} Td {} Tj ET\n", t->color.r,
                                 t->color.g, t->color.b, needs_unicode ? "F2" : "F1", t->size, t->render_mode, t->x,
                                 t->y, plan.show(t->text));
            } else {
                const auto& r = std::get<DrawRect>(item);
                c += fmt::format("{:.3f} {:.3f} {:.3f} rg {} {} {} {} re f\n", r.color.r, r.color.g, r.color.b, r.x,
                                 r.y, r.w, r.h);
            }
        }
        const int content = b.add(stream_object(c, compress));
        kids.push_back(Object(Ref{
            b.add(Object(Dict{{"Type", Object(Name{"Page"})},
                              {"Parent", Object(Ref{pages_node, 0})},
                              {"MediaBox", Object(Array{Object(0), Object(0), Object(page.width), Object(page.height)})},
                              {"Resources", Object(Dict{{"Font", Object(fonts)}})},
                              {"Contents", Object(Ref{content, 0})}})),
            0}));
    }
    b.set(pages_node, Object(Dict{{"Type", Object(Name{"Pages"})},
                                  {"Kids", Object(kids)},
                                  {"Count", Object(static_cast<long long>(kids.size()))}}));
    b.set(catalog, Object(Dict{{"Type", Object(Name{"Catalog"})}, {"Pages", Object(Ref{pages_node, 0})}}));
    std::optional<int> info_obj;
    if (!info.empty()) {
        Dict d;
        for (const auto& [k, v] : info) d[k] = Object(pdf::encode_text_string(v));
        info_obj = b.add(Object(std::move(d)));
    }
    return b.finish(catalog, info_obj);
}

// ---------------------------------------------------------------------------
// Attacks

namespace {

std::string percent_encode(std::string_view s) {
    std::string out;
    for (char c : s) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u) || c == '-' || c == '_' || c == '~') {
            out += c;
        } else {
            out += fmt::format("%{:02X}", u);
        }
    }
    return out;
}

std::string interleave_zero_width(std::string_view s, Rng& rng) {
    static constexpr char32_t kZw[] = {0x200B, 0x200C, 0x200D, 0x2060, 0xFEFF};
    std::string out;
    bool prev_letter = false;
    for (char32_t cp : text::decode_utf8(s)) {
        const bool letter = cp != ' ';
        if (prev_letter && letter) text::append_utf8(out, kZw[rng.pick(5)]);
        text::append_utf8(out, cp);
        prev_letter = letter;
    }
    return out;
}

std::string substitute_confusables(std::string_view s) {
    static const std::map<char32_t, char32_t> kSwap = {
        {'a', 0x430}, {'e', 0x435}, {'o', 0x43E}, {'p', 0x440}, {'c', 0x441}, {'A', 0x410}, {'E', 0x415},
        {'O', 0x41E}, {'P', 0x420}, {'C', 0x421}};
    std::string out;
    for (char32_t cp : text::decode_utf8(s)) {
        const auto it = kSwap.find(cp);
        text::append_utf8(out, it == kSwap.end() ? cp : it->second);
    }
    return out;
}

struct Placement {
    double x = 60, y = 100, size = 9;
    Rgb color = kBlack;
    int render_mode = 0;
    bool occlude = false;
    std::size_t wrap = 80;
};

std::string payload_content(const std::vector<std::string>& lines, const Placement& pl, const FontPlan& font,
                            const std::string& resource) {
    std::string c = fmt::format("{:.3f} {:.3f} {:.3f} rg\nBT /{} {} Tf {} TL {} Tr {} {} Td\n", pl.color.r, pl.color.g,
                                pl.color.b, resource, pl.size, pl.size * 1.25, pl.render_mode, pl.x, pl.y);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i) c += "T* ";
        c += font.show(lines[i]) + " Tj\n";
    }
    c += "ET\n";
    if (pl.occlude) {
        double width = 0;
        for (const auto& l : lines) {
            double w = 0;
            for (char32_t cp : text::decode_utf8(l)) w += font.width(cp) / 1000.0 * pl.size;
            width = std::max(width, w);
        }
        const double top = pl.y + pl.size;
        const double bottom = pl.y - pl.size * 1.25 * static_cast<double>(lines.size() - 1) - 0.4 * pl.size;
        c += fmt::format("1 1 1 rg {} {} {} {} re f\n", pl.x - 4, bottom, width + 8, top - bottom);
    }
    return c + "0 0 0 rg\n";
}

Object page_contents_with(const pdf::Document& doc, const Object& contents, int q, int Q, int payload) {
    Array arr{Object(Ref{q, 0})};
    const Object& resolved = doc.resolve(contents);
    if (resolved.is_array()) {
        for (const auto& c : resolved.array()) arr.push_back(c);
    } else if (!contents.is_null()) {
        arr.push_back(contents);
    }
    arr.push_back(Object(Ref{Q, 0}));
    arr.push_back(Object(Ref{payload, 0}));
    return Object(std::move(arr));
}

std::string xmp_packet(const std::string& description) {
    std::string escaped;
    for (char c : description) {
        switch (c) {
            case '<': escaped += "&lt;"; break;
            case '>': escaped += "&gt;"; break;
            case '&': escaped += "&amp;"; break;
            default: escaped += c;
        }
    }
    return "<?xpacket begin=\"\" id=\"W5M0MpCehiHzreSzNTczkc9d\"?>\n"
           "<x:xmpmeta xmlns:x=\"adobe:ns:meta/\">\n"
           "<rdf:RDF xmlns:rdf=\"http://www.w3.org/1999/02/22-rdf-syntax-ns#\">\n"
           "<rdf:Description rdf:about=\"\" xmlns:dc=\"http://purl.org/dc/elements/1.1/\">\n"
           "<dc:description><rdf:Alt><rdf:li xml:lang=\"x-default\">" +
           escaped +
           "</rdf:li></rdf:Alt></dc:description>\n"
           "</rdf:Description>\n</rdf:RDF>\n</x:xmpmeta>\n<?xpacket end=\"w\"?>";
}

std::uint64_t category_salt(AttackCategory c) { return 0x51ED270B27A3F001ULL * (static_cast<std::uint64_t>(c) + 1); }

}  // namespace

std::string synthesize_attack(const std::string& clean_pdf, AttackCategory category, std::uint64_t seed,
                              SynthesisInfo* info) {
    const pdf::Document doc = pdf::Document::parse(clean_pdf);
    const auto pages = doc.pages();
    if (pages.empty()) throw Error(ErrorCode::kUnsupportedPdfStructure, "document has no pages");
    Rng rng{splitmix64(seed ^ category_salt(category))};
    pdf::IncrementalUpdate up(doc);
    SynthesisInfo out;
    out.category = category;

    const std::string english = payloads::english()[rng.pick(payloads::english().size())];

    if (category == AttackCategory::kMetadata) {
        out.payload = english;
        out.page = -1;
        const std::size_t variant = rng.pick(4);
        if (variant == 3) {
            out.technique = "xmp-description";
            const Object& root_ref = doc.trailer().at("Root");
            if (!root_ref.is_ref()) throw Error(ErrorCode::kUnsupportedPdfStructure, "catalog is not indirect");
            Dict root = doc.resolve(root_ref).dict();
            const int xmp = up.add(stream_object(
                xmp_packet(english), false,
                Dict{{"Type", Object(Name{"Metadata"})}, {"Subtype", Object(Name{"XML"})}}));
            root["Metadata"] = Object(Ref{xmp, 0});
            up.replace(root_ref.ref().num, Object(std::move(root)));
        } else {
            static const char* kKeys[] = {"Subject", "Keywords", "Comments"};
            out.technique = std::string("info-") + kKeys[variant];
            Dict info_dict;
            if (auto it = doc.trailer().find("Info"); it != doc.trailer().end() && doc.resolve(it->second).is_dict()) {
                info_dict = doc.resolve(it->second).dict();
            }
            info_dict[kKeys[variant]] = Object(pdf::encode_text_string(english));
            up.set_trailer("Info", Object(Ref{up.add(Object(std::move(info_dict))), 0}));
        }
        if (info) *info = out;
        return up.finish();
    }

    const std::size_t page_index = rng.pick(pages.size());
    const auto& page = pages[page_index];
    if (page.ref.num <= 0) throw Error(ErrorCode::kUnsupportedPdfStructure, "page is not an indirect object");
    out.page = static_cast<int>(page_index);

    Placement pl;
    pl.x = 60 + static_cast<double>(rng.pick(30));
    pl.y = 100 - static_cast<double>(rng.pick(8));
    std::string payload = english;
    bool unicode = false;

    switch (category) {
        case AttackCategory::kWhiteText: {
            const std::size_t v = rng.pick(4);
            if (v == 0) {
                out.technique = "white-text";
                pl.color = kWhite;
            } else if (v == 1) {
                out.technique = "white-tiny-text";
                pl.color = kWhite;
                pl.size = 1;
                pl.wrap = 200;
            } else if (v == 2) {
                out.technique = "tiny-text";
                pl.size = 1.2;
                pl.wrap = 200;
            } else {
                out.technique = "near-white-text";
                pl.color = Rgb{0.98, 0.98, 0.98};
            }
            break;
        }
        case AttackCategory::kInvisibleChars: {
            const std::size_t v = rng.pick(3);
            if (v == 0) {
                out.technique = "zero-width-interleave";
                payload = interleave_zero_width(english, rng);
                unicode = true;
            } else if (v == 1) {
                out.technique = "confusable-letters";
                payload = substitute_confusables(english);
                unicode = true;
            } else {
                out.technique = "percent-encoded-url";
                payload = "Supplementary data: https://data.example.org/s?q=" +
                          percent_encode(payloads::english()[0]);
                pl.size = 6;
                pl.wrap = 400;
            }
            break;
        }
        case AttackCategory::kMixedLanguage: {
            const auto& f = payloads::foreign()[rng.pick(payloads::foreign().size())];
            out.technique = "second-language-" + f.lang;
            payload = f.phrase;
            unicode = true;
            pl.wrap = f.lang == "zh" || f.lang == "ja" || f.lang == "ko" ? 40 : 80;
            break;
        }
        case AttackCategory::kSteganographic: {
            const std::size_t v = rng.pick(3);
            if (v == 0) {
                out.technique = "off-page";
                pl.x = page.media_box[2] + 150;
            } else if (v == 1) {
                out.technique = "invisible-render-mode";
                pl.render_mode = 3;
            } else {
                out.technique = "painted-over";
                pl.occlude = true;
            }
            break;
        }
        case AttackCategory::kContextual:
            out.technique = "context-mimicry";
            payload = payloads::contextual()[rng.pick(payloads::contextual().size())];
            break;
        case AttackCategory::kMetadata: break;
    }
    out.payload = payload;

    FontPlan plan;
    int font_obj = 0;
    if (unicode) {
        std::set<char32_t> chars;
        for (char32_t cp : text::decode_utf8(payload)) chars.insert(cp);
        font_obj = add_unicode_font(up, chars, plan);
    } else {
        font_obj = up.add(Object(helvetica("Helvetica")));
    }

    const Object& res_obj = doc.lookup(page.dict, "Resources");
    Dict resources = res_obj.is_dict() ? res_obj.dict() : Dict{};
    const Object& fonts_obj = resources.count("Font") ? doc.resolve(resources.at("Font")) : Object();
    Dict fonts = fonts_obj.is_dict() ? fonts_obj.dict() : Dict{};
    std::string resource = "PLx";
    while (fonts.count(resource)) resource += "x";
    fonts[resource] = Object(Ref{font_obj, 0});
    resources["Font"] = Object(std::move(fonts));

    const int q = up.add(stream_object("q\n", false));
    const int Q = up.add(stream_object("Q\n", false));
    const int body = up.add(stream_object(payload_content(wrap(payload, pl.wrap), pl, plan, resource), false));

    const Object* own = doc.get(page.ref.num);
    Dict page_dict = own && own->is_dict() ? own->dict() : page.dict;
    const Object contents = page_dict.count("Contents") ? page_dict.at("Contents") : Object();
    page_dict["Contents"] = page_contents_with(doc, contents, q, Q, body);
    page_dict["Resources"] = Object(std::move(resources));
    up.replace(page.ref.num, Object(std::move(page_dict)));

    if (info) *info = out;
    return up.finish();
}

// ---------------------------------------------------------------------------
// Corpus

const std::map<AttackCategory, double>& attack_mix() {
    static const std::map<AttackCategory, double> kMix = {
        {AttackCategory::kWhiteText, 30},     {AttackCategory::kMetadata, 25},
        {AttackCategory::kInvisibleChars, 20}, {AttackCategory::kMixedLanguage, 15},
        {AttackCategory::kSteganographic, 7},  {AttackCategory::kContextual, 3}};
    return kMix;
}

std::map<AttackCategory, std::size_t> apportion_attacks(std::size_t total) {
    std::map<AttackCategory, std::size_t> out;
    std::vector<std::pair<double, AttackCategory>> remainders;
    std::size_t assigned = 0;
    for (auto c : kAllCategories) {
        const double quota = static_cast<double>(total) * attack_mix().at(c) / 100.0;
        const auto base = static_cast<std::size_t>(std::floor(quota));
        out[c] = base;
        assigned += base;
        remainders.emplace_back(quota - static_cast<double>(base), c);
    }
    // largest remainder first; ties keep the mix order
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++out[remainders[i % remainders.size()].second];
    return out;
}

std::size_t attack_count(std::size_t clean_count, double rate) {
    if (rate < 0) throw Error(ErrorCode::kInvalidArgument, "attack rate must be non-negative");
    // the epsilon keeps exact products such as 100 * 0.35 from rounding down
    return static_cast<std::size_t>(std::floor(static_cast<double>(clean_count) * rate + 1e-9));
}

std::vector<CorpusItem> build_corpus(const std::vector<std::pair<std::string, std::string>>& clean, double attack_rate,
                                     std::uint64_t seed) {
    std::vector<CorpusItem> items;
    for (const auto& [name, bytes] : clean) items.push_back(CorpusItem{name, bytes, std::nullopt, "", 0, ""});
    if (clean.empty()) return items;

    std::vector<AttackCategory> plan;
    for (const auto& [c, n] : apportion_attacks(attack_count(clean.size(), attack_rate))) plan.insert(plan.end(), n, c);
    Rng rng{splitmix64(seed)};
    for (std::size_t i = plan.size(); i > 1; --i) std::swap(plan[i - 1], plan[rng.pick(i)]);
    std::vector<std::size_t> sources(clean.size());
    for (std::size_t i = 0; i < sources.size(); ++i) sources[i] = i;
    for (std::size_t i = sources.size(); i > 1; --i) std::swap(sources[i - 1], sources[rng.pick(i)]);

    for (std::size_t k = 0; k < plan.size(); ++k) {
        const auto& [src_name, src_bytes] = clean[sources[k % sources.size()]];
        const std::uint64_t attack_seed = splitmix64(seed + k + 1);
        SynthesisInfo info;
        CorpusItem item;
        item.bytes = synthesize_attack(src_bytes, plan[k], attack_seed, &info);
        item.category = plan[k];
        item.source = src_name;
        item.seed = attack_seed;
        item.technique = info.technique;
        item.name = fmt::format("attack_{:03d}_{}.pdf", k, to_string(plan[k]));
        items.push_back(std::move(item));
    }
    return items;
}

nlohmann::json write_corpus(const std::filesystem::path& clean_dir, const std::filesystem::path& out_dir,
                            double attack_rate, std::uint64_t seed) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(clean_dir)) throw Error(ErrorCode::kIo, "not a directory: " + clean_dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(clean_dir)) {
        if (e.is_regular_file() && e.path().extension() == ".pdf") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<std::pair<std::string, std::string>> clean;
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        clean.emplace_back(f.filename().string(), std::string(std::istreambuf_iterator<char>(in), {}));
    }
    const auto items = build_corpus(clean, attack_rate, seed);
    fs::create_directories(out_dir / "clean");
    fs::create_directories(out_dir / "attacks");
    nlohmann::json manifest = {{"attack_rate", attack_rate}, {"seed", seed}, {"documents", nlohmann::json::array()}};
    std::map<std::string, std::size_t> histogram;
    for (const auto& item : items) {
        const fs::path rel = fs::path(item.category ? "attacks" : "clean") / item.name;
        std::ofstream(out_dir / rel, std::ios::binary) << item.bytes;
        nlohmann::json entry = {{"file", rel.generic_string()}, {"attack", item.category.has_value()}};
        if (item.category) {
            entry["category"] = to_string(*item.category);
            entry["technique"] = item.technique;
            entry["source"] = item.source;
            entry["seed"] = item.seed;
            ++histogram[std::string(to_string(*item.category))];
        }
        manifest["documents"].push_back(std::move(entry));
    }
    manifest["clean_count"] = clean.size();
    manifest["attack_count"] = items.size() - clean.size();
    manifest["histogram"] = histogram;
    std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << '\n';
    return manifest;
}

}  // namespace peerloop::guard
