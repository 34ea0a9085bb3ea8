#include "peerloop/guard/pdf.hpp"

#include <zlib.h>

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <deque>
#include <functional>
#include <set>

#include <fmt/format.h>

#include "peerloop/common/error.hpp"
#include "peerloop/common/text.hpp"

namespace peerloop::guard::pdf {

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::kMalformedPdf, what); }

bool is_ws(char c) { return c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '\f' || c == '\0'; }
bool is_delim(char c) {
    return c == '(' || c == ')' || c == '<' || c == '>' || c == '[' || c == ']' || c == '{' || c == '}' ||
           c == '/' || c == '%';
}
bool is_regular(char c) { return !is_ws(c) && !is_delim(c); }

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

double Object::number() const {
    if (const auto* i = std::get_if<long long>(&v_)) return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(&v_)) return *d;
    return 0.0;
}

// ---------------------------------------------------------------------------
// Lexer / parser

struct Token {
    enum Kind { kEof, kInt, kReal, kName, kString, kHex, kArrayOpen, kArrayClose, kDictOpen, kDictClose, kKeyword };
    Kind kind = kEof;
    std::string text;
    long long ival = 0;
    double rval = 0;
    std::size_t start = 0;
};

class Lexer {
public:
    explicit Lexer(std::string_view s, std::size_t pos = 0) : s_(s), pos_(pos) {}

    std::size_t pos() const { return pos_; }
    void seek(std::size_t p) { pos_ = p; }
    std::string_view source() const { return s_; }

    void skip_ws() {
        while (pos_ < s_.size()) {
            if (is_ws(s_[pos_])) {
                ++pos_;
            } else if (s_[pos_] == '%') {
                while (pos_ < s_.size() && s_[pos_] != '\n' && s_[pos_] != '\r') ++pos_;
            } else {
                break;
            }
        }
    }

    Token next() {
        skip_ws();
        Token t;
        t.start = pos_;
        if (pos_ >= s_.size()) return t;
        const char c = s_[pos_];
        if (c == '[') { ++pos_; t.kind = Token::kArrayOpen; return t; }
        if (c == ']') { ++pos_; t.kind = Token::kArrayClose; return t; }
        if (c == '{' || c == '}') { ++pos_; t.kind = Token::kKeyword; t.text = std::string(1, c); return t; }
        if (c == '<') {
            if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '<') { pos_ += 2; t.kind = Token::kDictOpen; return t; }
            t.kind = Token::kHex;
            t.text = read_hex();
            return t;
        }
        if (c == '>') {
            if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '>') { pos_ += 2; t.kind = Token::kDictClose; return t; }
            ++pos_;
            t.kind = Token::kKeyword;
            t.text = ">";
            return t;
        }
        if (c == '(') { t.kind = Token::kString; t.text = read_literal(); return t; }
        if (c == ')') { ++pos_; t.kind = Token::kKeyword; t.text = ")"; return t; }
        if (c == '/') {
            ++pos_;
            t.kind = Token::kName;
            while (pos_ < s_.size() && is_regular(s_[pos_])) {
                if (s_[pos_] == '#' && pos_ + 2 < s_.size() && hex_value(s_[pos_ + 1]) >= 0 &&
                    hex_value(s_[pos_ + 2]) >= 0) {
                    t.text += static_cast<char>(hex_value(s_[pos_ + 1]) * 16 + hex_value(s_[pos_ + 2]));
                    pos_ += 3;
                } else {
                    t.text += s_[pos_++];
                }
            }
            return t;
        }
        const std::size_t begin = pos_;
        while (pos_ < s_.size() && is_regular(s_[pos_])) ++pos_;
        t.text = std::string(s_.substr(begin, pos_ - begin));
        if (looks_numeric(t.text)) {
            if (t.text.find('.') == std::string::npos) {
                t.kind = Token::kInt;
                const char* first = t.text.data() + (t.text[0] == '+' ? 1 : 0);
                std::from_chars(first, t.text.data() + t.text.size(), t.ival);
                t.rval = static_cast<double>(t.ival);
            } else {
                t.kind = Token::kReal;
                t.rval = parse_real(t.text);
            }
        } else {
            t.kind = Token::kKeyword;
        }
        return t;
    }

private:
    static bool looks_numeric(const std::string& s) {
        if (s.empty()) return false;
        bool digit = false;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const char c = s[i];
            if (std::isdigit(static_cast<unsigned char>(c))) digit = true;
            else if ((c == '+' || c == '-') && i == 0) continue;
            else if (c == '.') continue;
            else return false;
        }
        return digit;
    }

    static double parse_real(const std::string& s) {
        // Tolerates forms like "-.5" and "--3" seen in the wild.
        std::string clean;
        bool neg = false;
        for (char c : s) {
            if (c == '-') neg = !neg;
            else if (c != '+') clean += c;
        }
        double v = 0;
        std::from_chars(clean.data(), clean.data() + clean.size(), v);
        return neg ? -v : v;
    }

    std::string read_hex() {
        ++pos_;
        std::string out;
        int hi = -1;
        while (pos_ < s_.size() && s_[pos_] != '>') {
            const int v = hex_value(s_[pos_++]);
            if (v < 0) continue;
            if (hi < 0) {
                hi = v;
            } else {
                out += static_cast<char>(hi * 16 + v);
                hi = -1;
            }
        }
        if (hi >= 0) out += static_cast<char>(hi * 16);
        if (pos_ < s_.size()) ++pos_;
        return out;
    }

    std::string read_literal() {
        ++pos_;
        std::string out;
        int depth = 1;
        while (pos_ < s_.size()) {
            const char c = s_[pos_++];
            if (c == '(') {
                ++depth;
                out += c;
            } else if (c == ')') {
                if (--depth == 0) return out;
                out += c;
            } else if (c == '\\') {
                if (pos_ >= s_.size()) break;
                const char e = s_[pos_++];
                switch (e) {
                    case 'n': out += '\n'; break;
                    case 'r': out += '\r'; break;
                    case 't': out += '\t'; break;
                    case 'b': out += '\b'; break;
                    case 'f': out += '\f'; break;
                    case '\r':
                        if (pos_ < s_.size() && s_[pos_] == '\n') ++pos_;
                        break;
                    case '\n': break;
                    default:
                        if (e >= '0' && e <= '7') {
                            int v = e - '0';
                            for (int k = 0; k < 2 && pos_ < s_.size() && s_[pos_] >= '0' && s_[pos_] <= '7'; ++k) {
                                v = v * 8 + (s_[pos_++] - '0');
                            }
                            out += static_cast<char>(v & 0xFF);
                        } else {
                            out += e;
                        }
                }
            } else {
                out += c;
            }
        }
        malformed("unterminated string literal");
    }

    std::string_view s_;
    std::size_t pos_;
};

class Parser {
public:
    explicit Parser(Lexer& lex) : lex_(lex) {}

    const Token& peek(std::size_t i = 0) {
        while (buf_.size() <= i) buf_.push_back(lex_.next());
        return buf_[i];
    }
    Token take() {
        peek();
        Token t = std::move(buf_.front());
        buf_.pop_front();
        return t;
    }
    /// Position just after the last consumed token; only valid with an empty lookahead.
    std::size_t position() const { return buf_.empty() ? lex_.pos() : buf_.front().start; }

    Object parse(int depth = 0) { return from(take(), depth); }

    Object from(Token t, int depth) {
        if (depth > 64) malformed("nesting too deep");
        switch (t.kind) {
            case Token::kEof: malformed("unexpected end of data");
            case Token::kInt: {
                const Token& a = peek(0);
                if (a.kind == Token::kInt) {
                    const Token& b = peek(1);
                    if (b.kind == Token::kKeyword && b.text == "R") {
                        const Ref r{static_cast<int>(t.ival), static_cast<int>(a.ival)};
                        take();
                        take();
                        return Object(r);
                    }
                }
                return Object(t.ival);
            }
            case Token::kReal: return Object(t.rval);
            case Token::kName: return Object(Name{std::move(t.text)});
            case Token::kString: return Object(String{std::move(t.text), false});
            case Token::kHex: return Object(String{std::move(t.text), true});
            case Token::kArrayOpen: {
                Array arr;
                while (true) {
                    const Token& p = peek();
                    if (p.kind == Token::kArrayClose) { take(); break; }
                    if (p.kind == Token::kEof) malformed("unterminated array");
                    if (p.kind == Token::kKeyword && (p.text == "endobj" || p.text == "stream")) {
                        malformed("unterminated array");
                    }
                    arr.push_back(parse(depth + 1));
                }
                return Object(std::move(arr));
            }
            case Token::kDictOpen: {
                Dict d;
                while (true) {
                    Token k = take();
                    if (k.kind == Token::kDictClose) break;
                    if (k.kind == Token::kEof) malformed("unterminated dictionary");
                    if (k.kind != Token::kName) {
                        if (k.kind == Token::kKeyword && (k.text == "endobj" || k.text == "stream")) {
                            malformed("unterminated dictionary");
                        }
                        continue;  // stray token; skip it
                    }
                    if (peek().kind == Token::kDictClose) break;
                    d[k.text] = parse(depth + 1);
                }
                return Object(std::move(d));
            }
            case Token::kArrayClose:
            case Token::kDictClose: malformed("unexpected closing delimiter");
            case Token::kKeyword:
                if (t.text == "true") return Object(true);
                if (t.text == "false") return Object(false);
                if (t.text == "null") return Object();
                malformed(fmt::format("unexpected keyword '{}'", t.text));
        }
        malformed("unreachable");
    }

    Lexer& lexer() { return lex_; }
    void clear() { buf_.clear(); }

private:
    Lexer& lex_;
    std::deque<Token> buf_;
};

// ---------------------------------------------------------------------------
// Filters

std::string flate_compress(std::string_view data) {
    uLongf len = compressBound(static_cast<uLong>(data.size()));
    std::string out(len, '\0');
    if (compress2(reinterpret_cast<Bytef*>(out.data()), &len, reinterpret_cast<const Bytef*>(data.data()),
                  static_cast<uLong>(data.size()), Z_BEST_COMPRESSION) != Z_OK) {
        throw Error(ErrorCode::kInvalidArgument, "deflate failed");
    }
    out.resize(len);
    return out;
}

std::string flate_decompress(std::string_view data) {
    z_stream zs{};
    if (inflateInit(&zs) != Z_OK) malformed("inflateInit failed");
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    zs.avail_in = static_cast<uInt>(data.size());
    std::string out;
    char buf[16384];
    int rc = Z_OK;
    while (rc == Z_OK) {
        zs.next_out = reinterpret_cast<Bytef*>(buf);
        zs.avail_out = sizeof(buf);
        rc = inflate(&zs, Z_NO_FLUSH);
        out.append(buf, sizeof(buf) - zs.avail_out);
        if (rc == Z_BUF_ERROR && zs.avail_in == 0) break;  // truncated input; keep what decoded
    }
    inflateEnd(&zs);
    if (rc != Z_STREAM_END && rc != Z_BUF_ERROR && out.empty()) malformed("corrupt Flate stream");
    return out;
}

namespace {

std::string ascii_hex_decode(std::string_view s) {
    std::string out;
    int hi = -1;
    for (char c : s) {
        if (c == '>') break;
        const int v = hex_value(c);
        if (v < 0) continue;
        if (hi < 0) {
            hi = v;
        } else {
            out += static_cast<char>(hi * 16 + v);
            hi = -1;
        }
    }
    if (hi >= 0) out += static_cast<char>(hi * 16);
    return out;
}

std::string ascii85_decode(std::string_view s) {
    std::string out;
    std::uint32_t tuple = 0;
    int count = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (c == '~') break;
        if (is_ws(c)) continue;
        if (c == 'z' && count == 0) {
            out.append(4, '\0');
            continue;
        }
        if (c < '!' || c > 'u') malformed("bad ASCII85 data");
        tuple = tuple * 85 + static_cast<std::uint32_t>(c - '!');
        if (++count == 5) {
            for (int k = 3; k >= 0; --k) out += static_cast<char>((tuple >> (8 * k)) & 0xFF);
            tuple = 0;
            count = 0;
        }
    }
    if (count > 1) {
        for (int k = count; k < 5; ++k) tuple = tuple * 85 + 84;
        for (int k = 0; k < count - 1; ++k) out += static_cast<char>((tuple >> (8 * (3 - k))) & 0xFF);
    }
    return out;
}

std::string png_unpredict(const std::string& data, int columns, int colors, int bpc) {
    const int bpp = std::max(1, colors * bpc / 8);
    const int row_len = (columns * colors * bpc + 7) / 8;
    std::string out;
    std::string prev(row_len, '\0');
    std::size_t i = 0;
    while (i + 1 + row_len <= data.size()) {
        const int type = static_cast<unsigned char>(data[i]);
        std::string row = data.substr(i + 1, row_len);
        for (int x = 0; x < row_len; ++x) {
            const int left = x >= bpp ? static_cast<unsigned char>(row[x - bpp]) : 0;
            const int up = static_cast<unsigned char>(prev[x]);
            const int upleft = x >= bpp ? static_cast<unsigned char>(prev[x - bpp]) : 0;
            int v = static_cast<unsigned char>(row[x]);
            switch (type) {
                case 1: v += left; break;
                case 2: v += up; break;
                case 3: v += (left + up) / 2; break;
                case 4: {
                    const int p = left + up - upleft;
                    const int pa = std::abs(p - left), pb = std::abs(p - up), pc = std::abs(p - upleft);
                    v += (pa <= pb && pa <= pc) ? left : (pb <= pc ? up : upleft);
                    break;
                }
                default: break;
            }
            row[x] = static_cast<char>(v & 0xFF);
        }
        out += row;
        prev = row;
        i += 1 + row_len;
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Document loading

namespace {

struct XrefEntry {
    enum Kind { kOffset, kCompressed } kind = kOffset;
    long long offset = 0;  // or containing stream number
    int index = 0;
};

class Loader {
public:
    explicit Loader(const std::string& bytes) : s_(bytes) {}

    std::map<int, XrefEntry> xref;
    Dict trailer;
    bool classic = true;
    long long startxref = -1;

    void read_xref_chain() {
        const std::size_t sx = s_.rfind("startxref");
        if (sx == std::string::npos) malformed("missing startxref (truncated file?)");
        Lexer lex(s_, sx + 9);
        const Token t = lex.next();
        if (t.kind != Token::kInt) malformed("bad startxref value");
        startxref = t.ival;
        std::set<long long> visited;
        long long off = startxref;
        bool first = true;
        while (off >= 0 && !visited.count(off)) {
            visited.insert(off);
            if (off >= static_cast<long long>(s_.size())) throw std::out_of_range("xref offset");
            Dict section_trailer;
            std::size_t at = static_cast<std::size_t>(off);
            while (at < s_.size() && is_ws(s_[at])) ++at;
            if (s_.compare(at, 4, "xref") == 0) {
                section_trailer = read_table(at + 4);
            } else {
                section_trailer = read_xref_stream(at);
                if (first) classic = false;
            }
            if (first) trailer = section_trailer;
            first = false;
            const auto prev = section_trailer.find("Prev");
            off = prev != section_trailer.end() && prev->second.is_number()
                      ? static_cast<long long>(prev->second.number())
                      : -1;
        }
    }

    void reconstruct() {
        xref.clear();
        trailer.clear();
        std::size_t pos = 0;
        while ((pos = s_.find("obj", pos)) != std::string::npos) {
            const std::size_t kw = pos;
            pos += 3;
            if (pos < s_.size() && is_regular(s_[pos])) continue;
            // walk back over "<num> <gen> "
            std::size_t e = kw;
            while (e > 0 && is_ws(s_[e - 1])) --e;
            std::size_t g = e;
            while (g > 0 && std::isdigit(static_cast<unsigned char>(s_[g - 1]))) --g;
            if (g == e) continue;
            std::size_t e2 = g;
            while (e2 > 0 && is_ws(s_[e2 - 1])) --e2;
            if (e2 == g) continue;
            std::size_t n = e2;
            while (n > 0 && std::isdigit(static_cast<unsigned char>(s_[n - 1]))) --n;
            if (n == e2 || (n > 0 && is_regular(s_[n - 1]))) continue;
            const int num = std::atoi(s_.substr(n, e2 - n).c_str());
            xref[num] = XrefEntry{XrefEntry::kOffset, static_cast<long long>(n), 0};
        }
        std::size_t tp = s_.rfind("trailer");
        while (tp != std::string::npos) {
            try {
                Lexer lex(s_, tp + 7);
                Parser p(lex);
                Object o = p.parse();
                if (o.is_dict() && o.dict().count("Root")) {
                    trailer = o.dict();
                    break;
                }
            } catch (const Error&) {
            }
            if (tp == 0) break;
            tp = s_.rfind("trailer", tp - 1);
        }
        if (trailer.empty()) {
            // xref-stream files: any stream dictionary that names a Root
            for (const auto& [num, entry] : xref) {
                try {
                    Object o = load_at(entry.offset, num);
                    if (o.is_stream() && o.stream()->dict.count("Root")) trailer = o.stream()->dict;
                } catch (const Error&) {
                }
            }
        }
        classic = true;
        if (trailer.empty()) malformed("no trailer found");
    }

    Object load(int num) {
        if (auto it = cache_.find(num); it != cache_.end()) return it->second;
        if (loading_.count(num)) malformed(fmt::format("reference cycle at object {}", num));
        const auto it = xref.find(num);
        if (it == xref.end()) return Object();
        loading_.insert(num);
        Object o;
        try {
            if (it->second.kind == XrefEntry::kOffset) {
                o = load_at(it->second.offset, num);
            } else {
                o = load_compressed(static_cast<int>(it->second.offset), it->second.index);
            }
        } catch (...) {
            loading_.erase(num);
            throw;
        }
        loading_.erase(num);
        cache_[num] = o;
        return o;
    }

    std::map<int, Object> take_all() {
        std::map<int, Object> out;
        for (const auto& [num, entry] : xref) {
            try {
                out[num] = load(num);
            } catch (const Error&) {
                out[num] = Object();  // unreadable objects resolve to null
            }
        }
        return out;
    }

    Object resolve(const Object& o) {
        Object cur = o;
        for (int i = 0; i < 32 && cur.is_ref(); ++i) cur = load(cur.ref().num);
        return cur.is_ref() ? Object() : cur;
    }

private:
    Dict read_table(std::size_t pos) {
        Lexer lex(s_, pos);
        while (true) {
            const std::size_t before = lex.pos();
            Token t = lex.next();
            if (t.kind == Token::kKeyword && t.text == "trailer") break;
            if (t.kind != Token::kInt) {
                (void)before;
                malformed("bad xref table");
            }
            const Token count = lex.next();
            if (count.kind != Token::kInt) malformed("bad xref subsection header");
            for (long long i = 0; i < count.ival; ++i) {
                const Token off = lex.next();
                const Token gen = lex.next();
                const Token kind = lex.next();
                if (off.kind != Token::kInt || gen.kind != Token::kInt || kind.kind != Token::kKeyword) {
                    malformed("bad xref entry");
                }
                const int num = static_cast<int>(t.ival + i);
                if (kind.text == "n" && !xref.count(num) && off.ival > 0) {
                    xref[num] = XrefEntry{XrefEntry::kOffset, off.ival, 0};
                } else if (kind.text == "f" && !xref.count(num)) {
                    freed_.insert(num);
                }
            }
        }
        Parser p(lex);
        Object tr = p.parse();
        if (!tr.is_dict()) malformed("trailer is not a dictionary");
        return tr.dict();
    }

    Dict read_xref_stream(std::size_t pos) {
        Lexer lex(s_, pos);
        const Token n = lex.next();
        if (n.kind != Token::kInt) malformed("startxref does not point at a cross-reference section");
        Object o = load_at(static_cast<long long>(pos), static_cast<int>(n.ival));
        if (!o.is_stream()) malformed("cross-reference stream expected");
        const Dict& d = o.stream()->dict;
        const auto type = d.find("Type");
        if (type == d.end() || !type->second.is_name("XRef")) malformed("cross-reference stream expected");
        const std::string data = decode_stream(*o.stream());
        const auto w = d.find("W");
        if (w == d.end() || !w->second.is_array() || w->second.array().size() != 3) malformed("bad /W");
        int widths[3];
        for (int i = 0; i < 3; ++i) widths[i] = static_cast<int>(w->second.array()[i].number());
        std::vector<std::pair<long long, long long>> ranges;
        if (auto idx = d.find("Index"); idx != d.end() && idx->second.is_array()) {
            const auto& a = idx->second.array();
            for (std::size_t i = 0; i + 1 < a.size(); i += 2) {
                ranges.emplace_back(static_cast<long long>(a[i].number()), static_cast<long long>(a[i + 1].number()));
            }
        } else {
            const auto size = d.find("Size");
            ranges.emplace_back(0, size != d.end() ? static_cast<long long>(size->second.number()) : 0);
        }
        const int row = widths[0] + widths[1] + widths[2];
        if (row <= 0) malformed("bad /W");
        std::size_t at = 0;
        auto field = [&](int width, long long dflt) {
            if (width == 0) return dflt;
            long long v = 0;
            for (int k = 0; k < width; ++k) v = (v << 8) | static_cast<unsigned char>(data[at++]);
            return v;
        };
        for (const auto& [start, count] : ranges) {
            for (long long i = 0; i < count; ++i) {
                if (at + row > data.size()) break;
                const long long type_v = field(widths[0], 1);
                const long long f2 = field(widths[1], 0);
                const long long f3 = field(widths[2], 0);
                const int num = static_cast<int>(start + i);
                if (xref.count(num) || freed_.count(num)) continue;
                if (type_v == 1) {
                    xref[num] = XrefEntry{XrefEntry::kOffset, f2, 0};
                } else if (type_v == 2) {
                    xref[num] = XrefEntry{XrefEntry::kCompressed, f2, static_cast<int>(f3)};
                } else if (type_v == 0) {
                    freed_.insert(num);
                }
            }
        }
        return d;
    }

    Object load_at(long long offset, int expected) {
        if (offset < 0 || offset >= static_cast<long long>(s_.size())) malformed("object offset out of range");
        Lexer lex(s_, static_cast<std::size_t>(offset));
        Parser p(lex);
        const Token num = p.take();
        const Token gen = p.take();
        const Token kw = p.take();
        if (num.kind != Token::kInt || gen.kind != Token::kInt || kw.kind != Token::kKeyword || kw.text != "obj" ||
            num.ival != expected) {
            malformed(fmt::format("object {} not found at offset {}", expected, offset));
        }
        Object o = p.parse();
        const Token& after = p.peek();
        if (after.kind == Token::kKeyword && after.text == "stream" && o.is_dict()) {
            std::size_t data_start = after.start + 6;
            if (data_start < s_.size() && s_[data_start] == '\r') ++data_start;
            if (data_start < s_.size() && s_[data_start] == '\n') ++data_start;
            auto stream = std::make_shared<Stream>();
            stream->dict = o.dict();
            stream->data = read_stream_data(stream->dict, data_start);
            return Object(stream);
        }
        return o;
    }

    std::string read_stream_data(const Dict& dict, std::size_t start) {
        long long length = -1;
        if (auto it = dict.find("Length"); it != dict.end()) {
            const Object len = it->second.is_ref() ? resolve(it->second) : it->second;
            if (len.is_number()) length = static_cast<long long>(len.number());
        }
        if (length >= 0 && start + static_cast<std::size_t>(length) <= s_.size()) {
            std::size_t e = start + static_cast<std::size_t>(length);
            while (e < s_.size() && is_ws(s_[e])) ++e;
            if (s_.compare(e, 9, "endstream") == 0) return s_.substr(start, static_cast<std::size_t>(length));
        }
        const std::size_t end = s_.find("endstream", start);
        if (end == std::string::npos) malformed("unterminated stream");
        std::size_t e = end;
        if (e > start && s_[e - 1] == '\n') --e;
        if (e > start && s_[e - 1] == '\r') --e;
        return s_.substr(start, e - start);
    }

    Object load_compressed(int stream_num, int index) {
        Object container = load(stream_num);
        if (!container.is_stream()) malformed("object stream missing");
        auto& parsed = objstm_[stream_num];
        if (parsed.empty()) {
            const auto& d = container.stream()->dict;
            const int n = d.count("N") ? static_cast<int>(d.at("N").number()) : 0;
            const long long first = d.count("First") ? static_cast<long long>(d.at("First").number()) : 0;
            const std::string data = decode_stream(*container.stream());
            Lexer lex(data);
            std::vector<long long> offsets;
            for (int i = 0; i < n; ++i) {
                lex.next();
                const Token off = lex.next();
                offsets.push_back(off.ival);
            }
            for (int i = 0; i < n; ++i) {
                try {
                    Lexer body(data, static_cast<std::size_t>(first + offsets[i]));
                    Parser p(body);
                    parsed.push_back(p.parse());
                } catch (const Error&) {
                    parsed.emplace_back();
                }
            }
            streams_data_[stream_num] = data;
        }
        if (index < 0 || index >= static_cast<int>(parsed.size())) return Object();
        return parsed[index];
    }

public:
    std::string decode_stream(const Stream& st) {
        auto filter_of = [&](const Object& f) -> std::vector<std::string> {
            const Object r = resolve(f);
            if (r.is_name()) return {r.name()};
            std::vector<std::string> out;
            if (r.is_array()) {
                for (const auto& e : r.array()) {
                    const Object n = resolve(e);
                    if (n.is_name()) out.push_back(n.name());
                }
            }
            return out;
        };
        std::vector<std::string> filters;
        if (auto it = st.dict.find("Filter"); it != st.dict.end()) filters = filter_of(it->second);
        std::vector<Object> parms;
        if (auto it = st.dict.find("DecodeParms"); it != st.dict.end()) {
            const Object r = resolve(it->second);
            if (r.is_array()) parms = r.array();
            else parms.push_back(r);
        }
        std::string data = st.data;
        for (std::size_t i = 0; i < filters.size(); ++i) {
            const std::string& f = filters[i];
            if (f == "FlateDecode" || f == "Fl") {
                data = flate_decompress(data);
                const Object p = i < parms.size() ? resolve(parms[i]) : Object();
                if (p.is_dict()) {
                    const auto& pd = p.dict();
                    const int predictor = pd.count("Predictor") ? static_cast<int>(pd.at("Predictor").number()) : 1;
                    if (predictor >= 10) {
                        const int columns = pd.count("Columns") ? static_cast<int>(pd.at("Columns").number()) : 1;
                        const int colors = pd.count("Colors") ? static_cast<int>(pd.at("Colors").number()) : 1;
                        const int bpc = pd.count("BitsPerComponent")
                                            ? static_cast<int>(pd.at("BitsPerComponent").number())
                                            : 8;
                        data = png_unpredict(data, columns, colors, bpc);
                    } else if (predictor == 2) {
                        throw Error(ErrorCode::kUnsupportedPdfStructure, "TIFF predictor");
                    }
                }
            } else if (f == "ASCIIHexDecode" || f == "AHx") {
                data = ascii_hex_decode(data);
            } else if (f == "ASCII85Decode" || f == "A85") {
                data = ascii85_decode(data);
            } else {
                throw Error(ErrorCode::kUnsupportedPdfStructure, fmt::format("filter /{} is not supported", f));
            }
        }
        return data;
    }

private:
    const std::string& s_;
    std::map<int, Object> cache_;
    std::set<int> loading_;
    std::set<int> freed_;
    std::map<int, std::vector<Object>> objstm_;
    std::map<int, std::string> streams_data_;
};

}  // namespace

Document Document::parse(std::string bytes) {
    Document doc;
    doc.bytes_ = std::move(bytes);
    const std::string& s = doc.bytes_;
    const std::size_t header = s.find("%PDF-");
    if (header == std::string::npos || header > 1024) malformed("missing %PDF- header");

    Loader loader(s);
    bool reconstructed = false;
    try {
        loader.read_xref_chain();
        if (!loader.trailer.count("Root")) throw std::runtime_error("no Root");
        (void)loader.load(loader.trailer.at("Root").is_ref() ? loader.trailer.at("Root").ref().num : -1);
    } catch (const Error& e) {
        if (s.rfind("startxref") == std::string::npos) throw;
        if (e.code() == ErrorCode::kUnsupportedPdfStructure) throw;
        reconstructed = true;
    } catch (const std::exception&) {
        reconstructed = true;
    }
    if (reconstructed) {
        const long long sx = loader.startxref;
        loader.reconstruct();
        loader.startxref = sx;
    }
    if (loader.trailer.count("Encrypt") && !loader.resolve(loader.trailer.at("Encrypt")).is_null()) {
        throw Error(ErrorCode::kEncryptedPdf, "document is encrypted");
    }
    doc.trailer_ = loader.trailer;
    doc.startxref_ = loader.startxref;
    doc.classic_xref_ = loader.classic && !reconstructed;
    doc.objects_ = loader.take_all();

    const Object& root = doc.resolve(doc.trailer_.count("Root") ? doc.trailer_.at("Root") : Object());
    if (!root.is_dict()) malformed("document catalog is missing");
    if (!doc.lookup(root.dict(), "Pages").is_dict()) malformed("page tree is missing");
    return doc;
}

int Document::max_object_number() const {
    int m = objects_.empty() ? 0 : objects_.rbegin()->first;
    if (auto it = trailer_.find("Size"); it != trailer_.end() && it->second.is_number()) {
        m = std::max(m, static_cast<int>(it->second.number()) - 1);
    }
    return m;
}

const Object& Document::resolve(const Object& o) const {
    static const Object kNull;
    const Object* cur = &o;
    for (int i = 0; i < 32 && cur->is_ref(); ++i) {
        const auto it = objects_.find(cur->ref().num);
        if (it == objects_.end()) return kNull;
        cur = &it->second;
    }
    return cur->is_ref() ? kNull : *cur;
}

const Object* Document::get(int num) const {
    const auto it = objects_.find(num);
    return it == objects_.end() ? nullptr : &it->second;
}

const Object& Document::lookup(const Dict& dict, const std::string& key) const {
    static const Object kNull;
    const auto it = dict.find(key);
    return it == dict.end() ? kNull : resolve(it->second);
}

std::vector<Document::Page> Document::pages() const {
    std::vector<Page> out;
    const Object& root = resolve(trailer_.at("Root"));
    std::set<int> visited;
    std::function<void(const Object&, Dict, int)> walk = [&](const Object& node_ref, Dict inherited, int depth) {
        if (depth > 64) return;
        if (node_ref.is_ref()) {
            if (visited.count(node_ref.ref().num)) return;
            visited.insert(node_ref.ref().num);
        }
        const Object& node = resolve(node_ref);
        if (!node.is_dict()) return;
        const Dict& d = node.dict();
        for (const char* key : {"Resources", "MediaBox", "CropBox", "Rotate"}) {
            if (auto it = d.find(key); it != d.end()) inherited[key] = it->second;
        }
        const Object& kids = lookup(d, "Kids");
        const Object& type = lookup(d, "Type");
        if (kids.is_array() && !type.is_name("Page")) {
            for (const auto& k : kids.array()) walk(k, inherited, depth + 1);
            return;
        }
        Page page;
        page.ref = node_ref.is_ref() ? node_ref.ref() : Ref{};
        page.dict = d;
        for (const auto& [k, v] : inherited) page.dict[k] = v;
        const Object& box = lookup(page.dict, "MediaBox");
        if (box.is_array() && box.array().size() == 4) {
            for (int i = 0; i < 4; ++i) page.media_box[i] = resolve(box.array()[i]).number();
            if (page.media_box[0] > page.media_box[2]) std::swap(page.media_box[0], page.media_box[2]);
            if (page.media_box[1] > page.media_box[3]) std::swap(page.media_box[1], page.media_box[3]);
        }
        out.push_back(std::move(page));
    };
    walk(root.dict().count("Pages") ? root.dict().at("Pages") : Object(), Dict{}, 0);
    return out;
}

std::string Document::decode(const Stream& s) const {
    Loader loader(bytes_);
    // Resolution of indirect filter parameters goes through this document's objects.
    std::string data = s.data;
    Stream copy;
    copy.data = s.data;
    for (const auto& [k, v] : s.dict) copy.dict[k] = v.is_ref() ? resolve(v) : v;
    return loader.decode_stream(copy);
}

std::string Document::page_content(const Page& page) const {
    const Object& contents = lookup(page.dict, "Contents");
    std::string out;
    auto append = [&](const Object& o) {
        const Object& r = resolve(o);
        if (!r.is_stream()) return;
        out += decode(*r.stream());
        out += '\n';
    };
    if (contents.is_array()) {
        for (const auto& c : contents.array()) append(c);
    } else {
        append(contents);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Content streams

std::vector<ContentOp> parse_content(std::string_view data) {
    std::vector<ContentOp> ops;
    Lexer lex(data);
    Parser p(lex);
    std::vector<Object> operands;
    try {
        while (true) {
            Token t = p.take();
            if (t.kind == Token::kEof) break;
            if (t.kind == Token::kKeyword && t.text != "true" && t.text != "false" && t.text != "null") {
                if (t.text == "BI") {
                    // skip the inline image dictionary and its binary payload
                    p.clear();
                    const std::size_t id = data.find("ID", lex.pos());
                    if (id == std::string_view::npos) break;
                    std::size_t at = id + 3;
                    while (at + 2 <= data.size()) {
                        const std::size_t ei = data.find("EI", at);
                        if (ei == std::string_view::npos) {
                            at = data.size();
                            break;
                        }
                        const bool before = ei > 0 && is_ws(data[ei - 1]);
                        const bool after = ei + 2 >= data.size() || is_ws(data[ei + 2]);
                        at = ei + 2;
                        if (before && after) break;
                    }
                    lex.seek(at);
                    ops.push_back(ContentOp{"BI", {}});
                    operands.clear();
                    continue;
                }
                ops.push_back(ContentOp{std::move(t.text), std::move(operands)});
                operands.clear();
                continue;
            }
            if (t.kind == Token::kArrayClose || t.kind == Token::kDictClose) continue;
            operands.push_back(p.from(std::move(t), 0));
        }
    } catch (const Error&) {
    }
    return ops;
}

// ---------------------------------------------------------------------------
// Serialization

std::string escape_literal(std::string_view bytes) {
    std::string out;
    out.reserve(bytes.size() + 8);
    for (char c : bytes) {
        switch (c) {
            case '(': out += "\\("; break;
            case ')': out += "\\)"; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    return out;
}

namespace {

std::string format_real(double v) {
    if (std::isnan(v) || std::isinf(v)) return "0";
    std::string s = fmt::format("{:.4f}", v);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    if (s == "-0" || s.empty()) s = "0";
    return s;
}

std::string serialize_name(const std::string& n) {
    std::string out = "/";
    for (char c : n) {
        const auto u = static_cast<unsigned char>(c);
        if (u < 0x21 || u > 0x7E || c == '#' || is_delim(c)) {
            out += fmt::format("#{:02X}", u);
        } else {
            out += c;
        }
    }
    return out;
}

void write(std::string& out, const Object& o) {
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                out += "null";
            } else if constexpr (std::is_same_v<T, bool>) {
                out += v ? "true" : "false";
            } else if constexpr (std::is_same_v<T, long long>) {
                out += std::to_string(v);
            } else if constexpr (std::is_same_v<T, double>) {
                out += format_real(v);
            } else if constexpr (std::is_same_v<T, Name>) {
                out += serialize_name(v.value);
            } else if constexpr (std::is_same_v<T, String>) {
                if (v.hex) {
                    out += '<';
                    for (char c : v.bytes) out += fmt::format("{:02X}", static_cast<unsigned char>(c));
                    out += '>';
                } else {
                    out += '(' + escape_literal(v.bytes) + ')';
                }
            } else if constexpr (std::is_same_v<T, Array>) {
                out += '[';
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (i) out += ' ';
                    write(out, v[i]);
                }
                out += ']';
            } else if constexpr (std::is_same_v<T, Dict>) {
                out += "<<";
                for (const auto& [k, val] : v) {
                    out += serialize_name(k);
                    out += ' ';
                    write(out, val);
                }
                out += ">>";
            } else if constexpr (std::is_same_v<T, Ref>) {
                out += fmt::format("{} {} R", v.num, v.gen);
            } else {
                Dict d = v->dict;
                d["Length"] = Object(static_cast<long long>(v->data.size()));
                write(out, Object(std::move(d)));
                out += "\nstream\n";
                out += v->data;
                out += "\nendstream";
            }
        },
        o.value());
}

void write_object(std::string& out, int num, const Object& o) {
    out += fmt::format("{} 0 obj\n", num);
    write(out, o);
    out += "\nendobj\n";
}

std::string xref_section(const std::map<int, std::size_t>& offsets, bool include_zero) {
    std::string out = "xref\n";
    std::vector<std::pair<int, std::size_t>> entries(offsets.begin(), offsets.end());
    if (include_zero) entries.insert(entries.begin(), {0, 0});
    std::size_t i = 0;
    while (i < entries.size()) {
        std::size_t j = i + 1;
        while (j < entries.size() && entries[j].first == entries[j - 1].first + 1) ++j;
        out += fmt::format("{} {}\n", entries[i].first, j - i);
        for (std::size_t k = i; k < j; ++k) {
            if (entries[k].first == 0) {
                out += "0000000000 65535 f\r\n";
            } else {
                out += fmt::format("{:010d} 00000 n\r\n", entries[k].second);
            }
        }
        i = j;
    }
    return out;
}

}  // namespace

std::string serialize(const Object& o) {
    std::string out;
    write(out, o);
    return out;
}

int Builder::reserve() { return next_++; }

void Builder::set(int num, Object o) {
    objects_[num] = std::move(o);
    next_ = std::max(next_, num + 1);
}

int Builder::add(Object o) {
    const int n = reserve();
    objects_[n] = std::move(o);
    return n;
}

std::string Builder::finish(int root, std::optional<int> info) const {
    std::string out = "%PDF-1.7\n%\xE2\xE3\xCF\xD3\n";
    std::map<int, std::size_t> offsets;
    for (int n = 1; n < next_; ++n) {
        offsets[n] = out.size();
        const auto it = objects_.find(n);
        write_object(out, n, it == objects_.end() ? Object() : it->second);
    }
    const std::size_t xref_at = out.size();
    out += xref_section(offsets, true);
    Dict trailer{{"Size", Object(next_)}, {"Root", Object(Ref{root, 0})}};
    if (info) trailer["Info"] = Object(Ref{*info, 0});
    out += "trailer\n" + serialize(Object(std::move(trailer)));
    out += fmt::format("\nstartxref\n{}\n%%EOF\n", xref_at);
    return out;
}

IncrementalUpdate::IncrementalUpdate(const Document& base) : base_(base), next_(base.max_object_number() + 1) {
    if (!base.classic_xref()) {
        throw Error(ErrorCode::kUnsupportedPdfStructure,
                    "incremental updates require a classic cross-reference table");
    }
}

int IncrementalUpdate::add(Object o) {
    const int n = next_++;
    objects_[n] = std::move(o);
    return n;
}

void IncrementalUpdate::replace(int num, Object o) { objects_[num] = std::move(o); }

void IncrementalUpdate::set_trailer(const std::string& key, Object o) { trailer_extra_[key] = std::move(o); }

std::string IncrementalUpdate::finish() const {
    std::string out = base_.bytes();
    if (!out.empty() && out.back() != '\n') out += '\n';
    std::map<int, std::size_t> offsets;
    for (const auto& [num, obj] : objects_) {
        offsets[num] = out.size();
        write_object(out, num, obj);
    }
    const std::size_t xref_at = out.size();
    out += xref_section(offsets, false);
    Dict trailer;
    for (const char* key : {"Root", "Info", "ID"}) {
        if (auto it = base_.trailer().find(key); it != base_.trailer().end()) trailer[key] = it->second;
    }
    for (const auto& [k, v] : trailer_extra_) trailer[k] = v;
    trailer["Size"] = Object(next_);
    trailer["Prev"] = Object(base_.startxref());
    out += "trailer\n" + serialize(Object(std::move(trailer)));
    out += fmt::format("\nstartxref\n{}\n%%EOF\n", xref_at);
    return out;
}

// ---------------------------------------------------------------------------
// Text strings

namespace {

// PDFDocEncoding 0x80..0x9F
constexpr char32_t kPdfDoc80[32] = {0x2022, 0x2020, 0x2021, 0x2026, 0x2014, 0x2013, 0x0192, 0x2044,
                                    0x2039, 0x203A, 0x2212, 0x2030, 0x201E, 0x201C, 0x201D, 0x2018,
                                    0x2019, 0x201A, 0x2122, 0xFB01, 0xFB02, 0x0141, 0x0152, 0x0160,
                                    0x0178, 0x017D, 0x0131, 0x0142, 0x0153, 0x0161, 0x017E, 0xFFFD};

}  // namespace

std::string decode_text_string(const std::string& b) {
    std::string out;
    if (b.size() >= 2 && static_cast<unsigned char>(b[0]) == 0xFE && static_cast<unsigned char>(b[1]) == 0xFF) {
        for (std::size_t i = 2; i + 1 < b.size(); i += 2) {
            char32_t u = (static_cast<unsigned char>(b[i]) << 8) | static_cast<unsigned char>(b[i + 1]);
            if (u >= 0xD800 && u <= 0xDBFF && i + 3 < b.size()) {
                const char32_t lo = (static_cast<unsigned char>(b[i + 2]) << 8) | static_cast<unsigned char>(b[i + 3]);
                if (lo >= 0xDC00 && lo <= 0xDFFF) {
                    u = 0x10000 + ((u - 0xD800) << 10) + (lo - 0xDC00);
                    i += 2;
                }
            }
            text::append_utf8(out, u);
        }
        return out;
    }
    if (b.size() >= 3 && b.compare(0, 3, "\xEF\xBB\xBF") == 0) return b.substr(3);
    for (char c : b) {
        const auto u = static_cast<unsigned char>(c);
        text::append_utf8(out, u >= 0x80 && u < 0xA0 ? kPdfDoc80[u - 0x80] : static_cast<char32_t>(u));
    }
    return out;
}

String encode_text_string(std::string_view utf8) {
    const bool ascii = std::all_of(utf8.begin(), utf8.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
    if (ascii) return String{std::string(utf8), false};
    std::string out = "\xFE\xFF";
    for (char32_t cp : text::decode_utf8(utf8)) {
        auto put = [&](char32_t u) {
            out += static_cast<char>((u >> 8) & 0xFF);
            out += static_cast<char>(u & 0xFF);
        };
        if (cp >= 0x10000) {
            const char32_t v = cp - 0x10000;
            put(0xD800 + (v >> 10));
            put(0xDC00 + (v & 0x3FF));
        } else {
            put(cp);
        }
    }
    return String{out, true};
}

}  // namespace peerloop::guard::pdf
