#pragma once

#include <compare>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace peerloop::guard::pdf {

struct Ref {
    int num = 0;
    int gen = 0;
    auto operator<=>(const Ref&) const = default;
};

struct Name {
    std::string value;
    bool operator==(const Name&) const = default;
};

struct String {
    std::string bytes;
    bool hex = false;
    bool operator==(const String&) const = default;
};

class Object;
using Array = std::vector<Object>;
using Dict = std::map<std::string, Object>;

struct Stream {
    Dict dict;
    std::string data;  // as stored (still filtered)
};

/// One PDF value. Streams are shared so copying a document's objects is cheap.
class Object {
public:
    using Value = std::variant<std::monostate, bool, long long, double, Name, String, Array, Dict, Ref,
                               std::shared_ptr<Stream>>;

    Object() = default;
    Object(bool b) : v_(b) {}
    Object(int i) : v_(static_cast<long long>(i)) {}
    Object(long long i) : v_(i) {}
    Object(double d) : v_(d) {}
    Object(Name n) : v_(std::move(n)) {}
    Object(String s) : v_(std::move(s)) {}
    Object(Array a) : v_(std::move(a)) {}
    Object(Dict d) : v_(std::move(d)) {}
    Object(Ref r) : v_(r) {}
    Object(std::shared_ptr<Stream> s) : v_(std::move(s)) {}

    bool is_null() const { return std::holds_alternative<std::monostate>(v_); }
    bool is_number() const { return std::holds_alternative<long long>(v_) || std::holds_alternative<double>(v_); }
    bool is_name() const { return std::holds_alternative<Name>(v_); }
    bool is_name(std::string_view n) const { return is_name() && std::get<Name>(v_).value == n; }
    bool is_string() const { return std::holds_alternative<String>(v_); }
    bool is_array() const { return std::holds_alternative<Array>(v_); }
    bool is_dict() const { return std::holds_alternative<Dict>(v_); }
    bool is_ref() const { return std::holds_alternative<Ref>(v_); }
    bool is_stream() const { return std::holds_alternative<std::shared_ptr<Stream>>(v_); }

    double number() const;  // 0 when not numeric
    const std::string& name() const { return std::get<Name>(v_).value; }
    const String& string() const { return std::get<String>(v_); }
    const Array& array() const { return std::get<Array>(v_); }
    Array& array() { return std::get<Array>(v_); }
    const Dict& dict() const { return std::get<Dict>(v_); }
    Dict& dict() { return std::get<Dict>(v_); }
    Ref ref() const { return std::get<Ref>(v_); }
    const std::shared_ptr<Stream>& stream() const { return std::get<std::shared_ptr<Stream>>(v_); }

    const Value& value() const { return v_; }

private:
    Value v_;
};

/// A parsed file. All reachable objects are loaded eagerly; the document is
/// immutable and safe to share across threads afterwards.
class Document {
public:
    /// Throws Error(kMalformedPdf) or Error(kEncryptedPdf).
    static Document parse(std::string bytes);

    const std::string& bytes() const { return bytes_; }
    const Dict& trailer() const { return trailer_; }
    /// Byte offset of the last cross-reference section.
    long long startxref() const { return startxref_; }
    /// True when the newest cross-reference data is a classic table.
    bool classic_xref() const { return classic_xref_; }
    int max_object_number() const;

    /// Follows references (bounded depth); unknown references resolve to null.
    const Object& resolve(const Object& o) const;
    const Object* get(int num) const;
    /// Value of `key` in `dict`, resolved.
    const Object& lookup(const Dict& dict, const std::string& key) const;

    struct Page {
        Ref ref;
        Dict dict;       // with inherited Resources / MediaBox / Rotate filled in
        double media_box[4] = {0, 0, 612, 792};
    };
    std::vector<Page> pages() const;

    /// Concatenated, decoded content streams of a page.
    std::string page_content(const Page& page) const;
    /// Applies the stream's filters. Unsupported filters throw kUnsupportedPdfStructure.
    std::string decode(const Stream& s) const;

private:
    std::string bytes_;
    Dict trailer_;
    std::map<int, Object> objects_;
    long long startxref_ = 0;
    bool classic_xref_ = true;
};

/// One content-stream operator with its operands. Inline image data is
/// skipped; `BI` is reported with no operands.
struct ContentOp {
    std::string op;
    std::vector<Object> operands;
};

/// Tokenizes a content stream (or a CMap, which shares the syntax). Stops
/// quietly at the first syntax error and returns what was read.
std::vector<ContentOp> parse_content(std::string_view data);

std::string serialize(const Object& o);

/// Builds a new single-revision file.
class Builder {
public:
    int reserve();
    void set(int num, Object o);
    int add(Object o);
    std::string finish(int root, std::optional<int> info = std::nullopt) const;

private:
    std::map<int, Object> objects_;
    int next_ = 1;
};

/// Appends an incremental update to an existing file; the original bytes are
/// kept verbatim. Throws kUnsupportedPdfStructure for files whose newest
/// cross-reference section is a stream.
class IncrementalUpdate {
public:
    explicit IncrementalUpdate(const Document& base);

    int add(Object o);
    void replace(int num, Object o);
    void set_trailer(const std::string& key, Object o);
    std::string finish() const;

private:
    const Document& base_;
    std::map<int, Object> objects_;
    Dict trailer_extra_;
    int next_;
};

std::string flate_compress(std::string_view data);
std::string flate_decompress(std::string_view data);

/// Literal-string escaping for content streams and serialization.
std::string escape_literal(std::string_view bytes);

/// Text strings in the document-info dictionary: UTF-16BE with BOM, else PDFDocEncoding.
std::string decode_text_string(const std::string& bytes);
/// Encodes as PDFDocEncoding when ASCII, otherwise UTF-16BE with BOM.
String encode_text_string(std::string_view utf8);

}  // namespace peerloop::guard::pdf
