#include "peerloop/guard/extract.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <functional>
#include <memory>

#include "peerloop/common/error.hpp"
#include "peerloop/common/text.hpp"

namespace peerloop::guard {

double color_distance(const Rgb& a, const Rgb& b) {
    const double dr = a.r - b.r, dg = a.g - b.g, db = a.b - b.b;
    return std::sqrt(dr * dr + dg * dg + db * db) / std::sqrt(3.0);
}

BBox BBox::unite(const BBox& o) const {
    return BBox{std::min(x0, o.x0), std::min(y0, o.y0), std::max(x1, o.x1), std::max(y1, o.y1)};
}

double BBox::overlap_area(const BBox& o) const {
    const double w = std::min(x1, o.x1) - std::max(x0, o.x0);
    const double h = std::min(y1, o.y1) - std::max(y0, o.y0);
    return w > 0 && h > 0 ? w * h : 0.0;
}

std::string ExtractedDocument::full_text() const {
    std::string out;
    int page = -1;
    for (const auto& s : spans) {
        if (!out.empty()) out += s.page != page ? "\n\n" : "\n";
        page = s.page;
        out += s.text;
    }
    return out;
}

bool is_zero_width(char32_t cp) {
    return cp == 0x200B || cp == 0x200C || cp == 0x200D || cp == 0xFEFF || cp == 0x2060;
}

std::size_t count_zero_width(std::string_view utf8) {
    std::size_t n = 0;
    for (char32_t cp : text::decode_utf8(utf8)) n += is_zero_width(cp) ? 1 : 0;
    return n;
}

namespace {

enum class Script { kOther, kLatin, kCyrillic, kGreek, kOddForm };

Script script_of(char32_t cp) {
    if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= 0xC0 && cp <= 0x24F && cp != 0xD7 && cp != 0xF7)) {
        return Script::kLatin;
    }
    if (cp >= 0x400 && cp <= 0x4FF) return Script::kCyrillic;
    if (cp >= 0x370 && cp <= 0x3FF) return Script::kGreek;
    if ((cp >= 0xFF21 && cp <= 0xFF3A) || (cp >= 0xFF41 && cp <= 0xFF5A) || (cp >= 0x1D400 && cp <= 0x1D7FF)) {
        return Script::kOddForm;
    }
    return Script::kOther;
}

bool is_bidi_control(char32_t cp) { return (cp >= 0x202A && cp <= 0x202E) || (cp >= 0x2066 && cp <= 0x2069); }

}  // namespace

bool has_confusables(std::string_view utf8) {
    bool latin = false, foreign = false;
    auto flush = [&]() {
        const bool mixed = latin && foreign;
        latin = foreign = false;
        return mixed;
    };
    for (char32_t cp : text::decode_utf8(utf8)) {
        const Script s = script_of(cp);
        if (s == Script::kOddForm) return true;
        if (s == Script::kLatin) {
            latin = true;
        } else if (s == Script::kCyrillic || s == Script::kGreek) {
            foreign = true;
        } else if (!is_zero_width(cp)) {
            if (flush()) return true;
        }
    }
    return flush();
}

unsigned encoding_flags_of(std::string_view utf8) {
    unsigned flags = 0;
    for (char32_t cp : text::decode_utf8(utf8)) {
        if (is_zero_width(cp)) flags |= encoding::kZeroWidth;
        if (is_bidi_control(cp)) flags |= encoding::kBidiControl;
        if (cp == 0xFFFD) flags |= encoding::kUnmapped;
    }
    if (has_confusables(utf8)) flags |= encoding::kConfusable;
    return flags;
}

namespace {

using pdf::Object;

struct Matrix {
    double a = 1, b = 0, c = 0, d = 1, e = 0, f = 0;

    // this applied first, then o
    Matrix then(const Matrix& o) const {
        return Matrix{a * o.a + b * o.c,       a * o.b + b * o.d,       c * o.a + d * o.c,
                      c * o.b + d * o.d,       e * o.a + f * o.c + o.e, e * o.b + f * o.d + o.f};
    }
    std::pair<double, double> apply(double x, double y) const { return {x * a + y * c + e, x * b + y * d + f}; }
    BBox map_box(double x0, double y0, double x1, double y1) const {
        const auto p1 = apply(x0, y0), p2 = apply(x1, y0), p3 = apply(x0, y1), p4 = apply(x1, y1);
        return BBox{std::min({p1.first, p2.first, p3.first, p4.first}),
                    std::min({p1.second, p2.second, p3.second, p4.second}),
                    std::max({p1.first, p2.first, p3.first, p4.first}),
                    std::max({p1.second, p2.second, p3.second, p4.second})};
    }
};

Matrix matrix_from(const std::vector<Object>& ops, std::size_t at = 0) {
    if (ops.size() < at + 6) return Matrix{};
    return Matrix{ops[at].number(),     ops[at + 1].number(), ops[at + 2].number(),
                  ops[at + 3].number(), ops[at + 4].number(), ops[at + 5].number()};
}

constexpr char32_t kWinAnsi80[32] = {0x20AC, 0xFFFD, 0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021,
                                     0x02C6, 0x2030, 0x0160, 0x2039, 0x0152, 0xFFFD, 0x017D, 0xFFFD,
                                     0xFFFD, 0x2018, 0x2019, 0x201C, 0x201D, 0x2022, 0x2013, 0x2014,
                                     0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0xFFFD, 0x017E, 0x0178};

char32_t glyph_name_to_unicode(const std::string& n) {
    if (n.size() == 1 && std::isalpha(static_cast<unsigned char>(n[0]))) return static_cast<char32_t>(n[0]);
    if (n.size() == 7 && n.rfind("uni", 0) == 0) return static_cast<char32_t>(std::strtoul(n.c_str() + 3, nullptr, 16));
    if (n.size() >= 5 && n.size() <= 7 && n[0] == 'u') {
        return static_cast<char32_t>(std::strtoul(n.c_str() + 1, nullptr, 16));
    }
    static const std::map<std::string, char32_t> kNames = {
        {"space", ' '},          {"period", '.'},        {"comma", ','},         {"hyphen", '-'},
        {"colon", ':'},          {"semicolon", ';'},     {"exclam", '!'},        {"question", '?'},
        {"parenleft", '('},      {"parenright", ')'},    {"bracketleft", '['},   {"bracketright", ']'},
        {"slash", '/'},          {"quotesingle", '\''},  {"quotedbl", '"'},      {"ampersand", '&'},
        {"percent", '%'},        {"plus", '+'},          {"equal", '='},         {"underscore", '_'},
        {"zero", '0'},           {"one", '1'},           {"two", '2'},           {"three", '3'},
        {"four", '4'},           {"five", '5'},          {"six", '6'},           {"seven", '7'},
        {"eight", '8'},          {"nine", '9'},          {"quoteright", 0x2019}, {"quoteleft", 0x2018},
        {"quotedblleft", 0x201C}, {"quotedblright", 0x201D}, {"endash", 0x2013}, {"emdash", 0x2014},
        {"bullet", 0x2022},      {"fi", 0xFB01},         {"fl", 0xFB02},         {"ellipsis", 0x2026},
    };
    const auto it = kNames.find(n);
    return it == kNames.end() ? 0xFFFD : it->second;
}

std::u32string utf16be_to_u32(const std::string& b) {
    std::u32string out;
    for (std::size_t i = 0; i + 1 < b.size(); i += 2) {
        char32_t u = (static_cast<unsigned char>(b[i]) << 8) | static_cast<unsigned char>(b[i + 1]);
        if (u >= 0xD800 && u <= 0xDBFF && i + 3 < b.size()) {
            const char32_t lo = (static_cast<unsigned char>(b[i + 2]) << 8) | static_cast<unsigned char>(b[i + 3]);
            u = 0x10000 + ((u - 0xD800) << 10) + (lo - 0xDC00);
            i += 2;
        }
        out.push_back(u);
    }
    return out;
}

unsigned code_of(const std::string& b) {
    unsigned v = 0;
    for (char c : b) v = (v << 8) | static_cast<unsigned char>(c);
    return v;
}

struct Font {
    bool two_byte = false;
    bool has_to_unicode = false;
    std::map<unsigned, std::u32string> to_unicode;
    std::array<char32_t, 256> base{};
    std::map<unsigned, double> widths;
    double default_width = 500;

    std::u32string decode(unsigned code) const {
        if (auto it = to_unicode.find(code); it != to_unicode.end()) return it->second;
        if (two_byte) return has_to_unicode ? U"�" : std::u32string(1, static_cast<char32_t>(code));
        return std::u32string(1, base[code & 0xFF]);
    }
    double width(unsigned code) const {
        const auto it = widths.find(code);
        return it == widths.end() ? default_width : it->second;
    }
};

void parse_cmap(const std::string& data, Font& font) {
    const auto ops = pdf::parse_content(data);
    for (const auto& op : ops) {
        if (op.op == "endbfchar") {
            for (std::size_t i = 0; i + 1 < op.operands.size(); i += 2) {
                if (!op.operands[i].is_string() || !op.operands[i + 1].is_string()) continue;
                font.to_unicode[code_of(op.operands[i].string().bytes)] =
                    utf16be_to_u32(op.operands[i + 1].string().bytes);
            }
        } else if (op.op == "endbfrange") {
            for (std::size_t i = 0; i + 2 < op.operands.size(); i += 3) {
                const auto& lo_o = op.operands[i];
                const auto& hi_o = op.operands[i + 1];
                const auto& dst = op.operands[i + 2];
                if (!lo_o.is_string() || !hi_o.is_string()) continue;
                const unsigned lo = code_of(lo_o.string().bytes), hi = code_of(hi_o.string().bytes);
                if (hi < lo || hi - lo > 0xFFFF) continue;
                if (dst.is_string()) {
                    std::u32string base = utf16be_to_u32(dst.string().bytes);
                    if (base.empty()) continue;
                    for (unsigned c = lo; c <= hi; ++c) {
                        font.to_unicode[c] = base;
                        ++base.back();
                    }
                } else if (dst.is_array()) {
                    unsigned c = lo;
                    for (const auto& e : dst.array()) {
                        if (c > hi) break;
                        if (e.is_string()) font.to_unicode[c] = utf16be_to_u32(e.string().bytes);
                        ++c;
                    }
                }
            }
        }
    }
    font.has_to_unicode = !font.to_unicode.empty();
}

class Interpreter {
public:
    Interpreter(const pdf::Document& doc, ExtractedDocument& out) : doc_(doc), out_(out) {}

    void run_page(const pdf::Document::Page& page, int index) {
        page_ = index;
        seq_ = 0;
        fills_.clear();
        page_spans_.clear();
        fonts_.clear();  // keys are addresses that may be reused by the next page
        const BBox media{page.media_box[0], page.media_box[1], page.media_box[2], page.media_box[3]};
        std::string content;
        try {
            content = doc_.page_content(page);
        } catch (const Error& e) {
            out_.warnings.push_back("page " + std::to_string(index + 1) + ": " + e.what());
        }
        State st;
        const Object& res = doc_.lookup(page.dict, "Resources");
        execute(content, res.is_dict() ? res.dict() : pdf::Dict{}, st, 0);
        finish_page(media);
    }

private:
    struct State {
        Matrix ctm;
        Rgb fill = kBlack;
        const Font* font = nullptr;
        double size = 0;
        double tc = 0, tw = 0, th = 1, tl = 0, rise = 0;
        int tr = 0;
    };

    struct Fill {
        BBox box;
        std::optional<Rgb> color;
        std::size_t seq;
    };

    void execute(const std::string& content, const pdf::Dict& resources, State st, int depth) {
        if (depth > 8) return;
        std::vector<State> stack;
        Matrix tm, tlm;
        std::vector<BBox> path;
        const auto ops = pdf::parse_content(content);
        auto num = [](const std::vector<Object>& v, std::size_t i) { return i < v.size() ? v[i].number() : 0.0; };
        for (const auto& op : ops) {
            const auto& a = op.operands;
            const std::string& o = op.op;
            if (o == "q") {
                stack.push_back(st);
            } else if (o == "Q") {
                if (!stack.empty()) {
                    st = stack.back();
                    stack.pop_back();
                }
            } else if (o == "cm") {
                st.ctm = matrix_from(a).then(st.ctm);
            } else if (o == "rg" && a.size() >= 3) {
                st.fill = Rgb{num(a, 0), num(a, 1), num(a, 2)};
            } else if (o == "g" && !a.empty()) {
                st.fill = Rgb{num(a, 0), num(a, 0), num(a, 0)};
            } else if (o == "k" && a.size() >= 4) {
                st.fill = cmyk(num(a, 0), num(a, 1), num(a, 2), num(a, 3));
            } else if (o == "sc" || o == "scn") {
                std::vector<double> comps;
                for (const auto& v : a) {
                    if (v.is_number()) comps.push_back(v.number());
                }
                if (comps.size() == 1) st.fill = Rgb{comps[0], comps[0], comps[0]};
                else if (comps.size() == 3) st.fill = Rgb{comps[0], comps[1], comps[2]};
                else if (comps.size() == 4) st.fill = cmyk(comps[0], comps[1], comps[2], comps[3]);
            } else if (o == "cs") {
                st.fill = kBlack;
            } else if (o == "re" && a.size() >= 4) {
                const double x = num(a, 0), y = num(a, 1), w = num(a, 2), h = num(a, 3);
                path.push_back(st.ctm.map_box(std::min(x, x + w), std::min(y, y + h), std::max(x, x + w),
                                              std::max(y, y + h)));
            } else if (o == "f" || o == "F" || o == "f*" || o == "B" || o == "B*" || o == "b" || o == "b*") {
                for (const auto& box : path) fills_.push_back(Fill{box, st.fill, seq_++});
                path.clear();
            } else if (o == "n" || o == "S" || o == "s" || o == "W" || o == "W*") {
                if (o != "W" && o != "W*") path.clear();
            } else if (o == "BT") {
                tm = tlm = Matrix{};
            } else if (o == "Tf" && a.size() >= 2) {
                st.font = a[0].is_name() ? font(resources, a[0].name()) : nullptr;
                st.size = num(a, 1);
            } else if (o == "Tc") {
                st.tc = num(a, 0);
            } else if (o == "Tw") {
                st.tw = num(a, 0);
            } else if (o == "Tz") {
                st.th = num(a, 0) / 100.0;
            } else if (o == "TL") {
                st.tl = num(a, 0);
            } else if (o == "Ts") {
                st.rise = num(a, 0);
            } else if (o == "Tr") {
                st.tr = static_cast<int>(num(a, 0));
            } else if (o == "Td" || o == "TD") {
                if (o == "TD") st.tl = -num(a, 1);
                tlm = Matrix{1, 0, 0, 1, num(a, 0), num(a, 1)}.then(tlm);
                tm = tlm;
            } else if (o == "Tm") {
                tlm = tm = matrix_from(a);
            } else if (o == "T*") {
                tlm = Matrix{1, 0, 0, 1, 0, -st.tl}.then(tlm);
                tm = tlm;
            } else if (o == "Tj" && !a.empty()) {
                show(Array1(a[0]), st, tm);
            } else if (o == "TJ" && !a.empty() && a[0].is_array()) {
                show(a[0].array(), st, tm);
            } else if (o == "'" && !a.empty()) {
                tlm = Matrix{1, 0, 0, 1, 0, -st.tl}.then(tlm);
                tm = tlm;
                show(Array1(a[0]), st, tm);
            } else if (o == "\"" && a.size() >= 3) {
                st.tw = num(a, 0);
                st.tc = num(a, 1);
                tlm = Matrix{1, 0, 0, 1, 0, -st.tl}.then(tlm);
                tm = tlm;
                show(Array1(a[2]), st, tm);
            } else if (o == "Do" && !a.empty() && a[0].is_name()) {
                xobject(resources, a[0].name(), st, depth);
            } else if (o == "BI") {
                fills_.push_back(Fill{st.ctm.map_box(0, 0, 1, 1), std::nullopt, seq_++});
            }
        }
    }

    static pdf::Array Array1(const Object& o) { return pdf::Array{o}; }

    static Rgb cmyk(double c, double m, double y, double k) {
        return Rgb{(1 - c) * (1 - k), (1 - m) * (1 - k), (1 - y) * (1 - k)};
    }

    void xobject(const pdf::Dict& resources, const std::string& name, const State& st, int depth) {
        const Object& xobjects = doc_.lookup(resources, "XObject");
        if (!xobjects.is_dict()) return;
        const Object& x = doc_.lookup(xobjects.dict(), name);
        if (!x.is_stream()) return;
        const pdf::Dict& d = x.stream()->dict;
        const Object& subtype = doc_.lookup(d, "Subtype");
        if (subtype.is_name("Image")) {
            fills_.push_back(Fill{st.ctm.map_box(0, 0, 1, 1), std::nullopt, seq_++});
        } else if (subtype.is_name("Form")) {
            State inner = st;
            const Object& m = doc_.lookup(d, "Matrix");
            if (m.is_array() && m.array().size() == 6) {
                std::vector<Object> vals;
                for (const auto& v : m.array()) vals.push_back(doc_.resolve(v));
                inner.ctm = matrix_from(vals).then(st.ctm);
            }
            const Object& res = doc_.lookup(d, "Resources");
            std::string data;
            try {
                data = doc_.decode(*x.stream());
            } catch (const Error& e) {
                out_.warnings.push_back(std::string("form XObject: ") + e.what());
                return;
            }
            execute(data, res.is_dict() ? res.dict() : resources, inner, depth + 1);
        }
    }

    const Font* font(const pdf::Dict& resources, const std::string& name) {
        const Object& fonts = doc_.lookup(resources, "Font");
        if (!fonts.is_dict()) return nullptr;
        const auto it = fonts.dict().find(name);
        if (it == fonts.dict().end()) return nullptr;
        const Object& fd = doc_.resolve(it->second);
        if (!fd.is_dict()) return nullptr;
        const void* key = &fd;
        if (auto c = fonts_.find(key); c != fonts_.end()) return c->second.get();
        auto f = std::make_unique<Font>();
        load_font(fd.dict(), *f);
        const Font* raw = f.get();
        fonts_[key] = std::move(f);
        return raw;
    }

    void load_font(const pdf::Dict& d, Font& f) {
        for (unsigned i = 0; i < 256; ++i) {
            f.base[i] = i >= 0x80 && i < 0xA0 ? kWinAnsi80[i - 0x80] : static_cast<char32_t>(i);
        }
        const Object& subtype = doc_.lookup(d, "Subtype");
        f.two_byte = subtype.is_name("Type0");
        const Object& enc = doc_.lookup(d, "Encoding");
        if (enc.is_dict()) {
            const Object& diffs = doc_.lookup(enc.dict(), "Differences");
            if (diffs.is_array()) {
                unsigned code = 0;
                for (const auto& e : diffs.array()) {
                    const Object& v = doc_.resolve(e);
                    if (v.is_number()) {
                        code = static_cast<unsigned>(v.number());
                    } else if (v.is_name() && code < 256) {
                        f.base[code++] = glyph_name_to_unicode(v.name());
                    }
                }
            }
        }
        const Object& tu = doc_.lookup(d, "ToUnicode");
        if (tu.is_stream()) {
            try {
                parse_cmap(doc_.decode(*tu.stream()), f);
            } catch (const Error& e) {
                out_.warnings.push_back(std::string("ToUnicode: ") + e.what());
            }
        }
        if (f.two_byte) {
            f.default_width = 1000;
            const Object& desc = doc_.lookup(d, "DescendantFonts");
            if (desc.is_array() && !desc.array().empty()) {
                const Object& cid = doc_.resolve(desc.array()[0]);
                if (cid.is_dict()) {
                    const Object& dw = doc_.lookup(cid.dict(), "DW");
                    if (dw.is_number()) f.default_width = dw.number();
                    const Object& w = doc_.lookup(cid.dict(), "W");
                    if (w.is_array()) load_cid_widths(w.array(), f);
                }
            }
        } else {
            const Object& first = doc_.lookup(d, "FirstChar");
            const Object& widths = doc_.lookup(d, "Widths");
            if (widths.is_array()) {
                unsigned c = first.is_number() ? static_cast<unsigned>(first.number()) : 0;
                for (const auto& w : widths.array()) f.widths[c++] = doc_.resolve(w).number();
            }
        }
    }

    void load_cid_widths(const pdf::Array& w, Font& f) {
        std::size_t i = 0;
        while (i < w.size()) {
            const Object& first = doc_.resolve(w[i]);
            if (!first.is_number() || i + 1 >= w.size()) break;
            const Object& next = doc_.resolve(w[i + 1]);
            if (next.is_array()) {
                unsigned c = static_cast<unsigned>(first.number());
                for (const auto& v : next.array()) f.widths[c++] = doc_.resolve(v).number();
                i += 2;
            } else if (i + 2 < w.size()) {
                const unsigned lo = static_cast<unsigned>(first.number());
                const unsigned hi = static_cast<unsigned>(next.number());
                const double width = doc_.resolve(w[i + 2]).number();
                for (unsigned c = lo; c <= hi && c - lo < 0x10000; ++c) f.widths[c] = width;
                i += 3;
            } else {
                break;
            }
        }
    }

    void show(const pdf::Array& items, const State& st, Matrix& tm) {
        const Font* f = st.font;
        const Matrix start = tm.then(st.ctm);
        double advance = 0;  // unscaled text space
        std::u32string text;
        for (const auto& item : items) {
            if (item.is_number()) {
                const double shift = -item.number() / 1000.0 * st.size * st.th;
                advance += shift;
                if (shift > 0.2 * st.size && !text.empty() && text.back() != U' ') text.push_back(U' ');
                continue;
            }
            if (!item.is_string()) continue;
            const std::string& bytes = item.string().bytes;
            const std::size_t step = f && f->two_byte ? 2 : 1;
            for (std::size_t i = 0; i + step <= bytes.size(); i += step) {
                const unsigned code = code_of(bytes.substr(i, step));
                if (f) {
                    text += f->decode(code);
                } else {
                    text.push_back(static_cast<char32_t>(code));
                }
                const double w = f ? f->width(code) : 500.0;
                const bool word_space = step == 1 && code == 32;
                advance += (w / 1000.0 * st.size + st.tc + (word_space ? st.tw : 0.0)) * st.th;
            }
        }
        tm = Matrix{1, 0, 0, 1, advance, 0}.then(tm);
        if (text.empty()) return;

        TextSpan span;
        span.text = text::encode_utf8(text);
        span.page = page_;
        const double lo = st.rise - 0.2 * st.size, hi = st.rise + 0.8 * st.size;
        span.bbox = start.map_box(std::min(0.0, advance), lo, std::max(0.0, advance), hi);
        span.font_size = std::abs(st.size) * std::hypot(start.c, start.d);
        span.color = st.fill;
        span.render_mode = st.tr;
        span.encoding_flags = encoding_flags_of(span.text);
        span.sequence = seq_++;
        page_spans_.push_back(std::move(span));
    }

    void finish_page(const BBox& media) {
        const double media_area = media.area();
        std::size_t first_text = page_spans_.empty() ? seq_ : page_spans_.front().sequence;
        Rgb background = kWhite;
        for (const auto& fill : fills_) {
            if (fill.seq > first_text || !fill.color) continue;
            if (media_area > 0 && fill.box.overlap_area(media) >= 0.9 * media_area) background = *fill.color;
        }
        out_.page_backgrounds.push_back(background);
        out_.page_boxes.push_back(media);

        for (auto& span : page_spans_) {
            const double cx = (span.bbox.x0 + span.bbox.x1) / 2, cy = (span.bbox.y0 + span.bbox.y1) / 2;
            span.local_background = background;
            for (auto it = fills_.rbegin(); it != fills_.rend(); ++it) {
                if (it->seq < span.sequence && it->box.contains(cx, cy)) {
                    span.local_background = it->color;
                    break;
                }
            }
            const double area = span.bbox.area();
            for (const auto& fill : fills_) {
                if (fill.seq > span.sequence && area > 0 && fill.box.overlap_area(span.bbox) >= 0.9 * area) {
                    span.occluded = true;
                    break;
                }
            }
            if (area > 0) {
                span.off_page = span.bbox.overlap_area(media) < 0.1 * area;
            } else {
                span.off_page = !media.contains(cx, cy);
            }
        }
        order_spans();
        for (auto& s : page_spans_) out_.spans.push_back(std::move(s));
    }

    void order_spans() {
        auto baseline = [](const TextSpan& s) { return s.bbox.y0 + 0.2 * (s.bbox.y1 - s.bbox.y0); };
        std::stable_sort(page_spans_.begin(), page_spans_.end(),
                         [&](const TextSpan& a, const TextSpan& b) { return baseline(a) > baseline(b); });
        std::size_t i = 0;
        while (i < page_spans_.size()) {
            const double y = baseline(page_spans_[i]);
            const double tol = std::max(0.5 * page_spans_[i].font_size, 0.5);
            std::size_t j = i + 1;
            while (j < page_spans_.size() && std::abs(baseline(page_spans_[j]) - y) <= tol) ++j;
            std::stable_sort(page_spans_.begin() + static_cast<long>(i), page_spans_.begin() + static_cast<long>(j),
                             [](const TextSpan& a, const TextSpan& b) { return a.bbox.x0 < b.bbox.x0; });
            i = j;
        }
    }

    const pdf::Document& doc_;
    ExtractedDocument& out_;
    int page_ = 0;
    std::size_t seq_ = 0;
    std::vector<Fill> fills_;
    std::vector<TextSpan> page_spans_;
    std::map<const void*, std::unique_ptr<Font>> fonts_;
};

std::string strip_xml(const std::string& xml) {
    std::string out;
    bool in_tag = false;
    std::string chunk;
    auto flush = [&]() {
        const std::string t = text::trim(chunk);
        if (!t.empty()) {
            if (!out.empty()) out += ' ';
            out += t;
        }
        chunk.clear();
    };
    for (char c : xml) {
        if (c == '<') {
            flush();
            in_tag = true;
        } else if (c == '>') {
            in_tag = false;
        } else if (!in_tag) {
            chunk += c;
        }
    }
    flush();
    // minimal entity decoding
    const std::pair<const char*, const char*> entities[] = {
        {"&lt;", "<"}, {"&gt;", ">"}, {"&quot;", "\""}, {"&apos;", "'"}, {"&amp;", "&"}};
    for (const auto& [from, to] : entities) {
        std::size_t p = 0;
        while ((p = out.find(from, p)) != std::string::npos) {
            out.replace(p, std::strlen(from), to);
            p += std::strlen(to);
        }
    }
    return out;
}

}  // namespace

ExtractedDocument extract(const pdf::Document& doc) {
    ExtractedDocument out;
    Interpreter interp(doc, out);
    const auto pages = doc.pages();
    for (std::size_t i = 0; i < pages.size(); ++i) interp.run_page(pages[i], static_cast<int>(i));

    if (auto it = doc.trailer().find("Info"); it != doc.trailer().end()) {
        const Object& info = doc.resolve(it->second);
        if (info.is_dict()) {
            for (const auto& [k, v] : info.dict()) {
                const Object& r = doc.resolve(v);
                if (r.is_string()) out.metadata[k] = pdf::decode_text_string(r.string().bytes);
            }
        }
    }
    const Object& root = doc.resolve(doc.trailer().at("Root"));
    const Object& xmp = doc.lookup(root.dict(), "Metadata");
    if (xmp.is_stream()) {
        try {
            const std::string text = strip_xml(doc.decode(*xmp.stream()));
            if (!text.empty()) out.metadata["XMP"] = text;
        } catch (const Error& e) {
            out.warnings.push_back(std::string("XMP: ") + e.what());
        }
    }
    return out;
}

ExtractedDocument extract(std::string bytes) { return extract(pdf::Document::parse(std::move(bytes))); }

ExtractedDocument extract_plain_text(std::string_view body) {
    ExtractedDocument out;
    out.page_backgrounds.push_back(kWhite);
    out.page_boxes.push_back(BBox{0, 0, 612, 792});
    double y = 760;
    std::size_t seq = 0;
    for (const auto& line : text::split_lines(body)) {
        if (text::trim(line).empty()) continue;
        TextSpan s;
        s.text = line;
        s.page = 0;
        s.font_size = 10;
        s.bbox = BBox{36, y - 2, 36 + 5.0 * static_cast<double>(text::count_code_points(line)), y + 8};
        s.encoding_flags = encoding_flags_of(line);
        s.sequence = seq++;
        out.spans.push_back(std::move(s));
        y -= 12;
    }
    return out;
}

}  // namespace peerloop::guard
