#pragma once

#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace peerloop::llm {

/// Declarative description of a JSON document shape, used to validate model
/// output and tool inputs. Exportable as JSON Schema (draft 2020-12 subset).
class Schema {
public:
    struct Field;

    static Schema object(std::vector<Field> fields, bool allow_additional = false);
    /// Object with arbitrary keys sharing one value shape.
    static Schema map(Schema values, std::size_t min_entries = 0, std::vector<std::string> required_keys = {});
    static Schema array(Schema items, std::size_t min_items = 0,
                        std::optional<std::size_t> max_items = std::nullopt);
    static Schema string(bool non_empty = false);
    static Schema string_enum(std::vector<std::string> values);
    static Schema integer(std::optional<long long> min = std::nullopt, std::optional<long long> max = std::nullopt);
    static Schema number(std::optional<double> min = std::nullopt, std::optional<double> max = std::nullopt);
    static Schema boolean();
    static Schema any();
    /// Exactly one alternative must match.
    static Schema one_of(std::vector<Schema> alternatives);

    /// Empty when valid; otherwise one message per violation, prefixed with a
    /// JSON-pointer-like path.
    std::vector<std::string> validate(const nlohmann::json& doc) const;
    bool accepts(const nlohmann::json& doc) const { return validate(doc).empty(); }

    nlohmann::json to_json_schema() const;

private:
    enum class Type { kObject, kMap, kArray, kString, kInteger, kNumber, kBoolean, kAny, kOneOf };
    struct Node;

    explicit Schema(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    static void check(const Node& n, const nlohmann::json& doc, const std::string& path,
                      std::vector<std::string>& errors);
    static nlohmann::json export_node(const Node& n);

    std::shared_ptr<const Node> node_;
};

struct Schema::Field {
    std::string name;
    Schema schema;
    bool required = true;
};

/// Thread-safe registry of named schemas.
class SchemaRegistry {
public:
    void add(std::string id, Schema schema);
    Schema get(const std::string& id) const;  // throws kUnknownSchema
    bool contains(const std::string& id) const;
    std::vector<std::string> ids() const;

private:
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::shared_ptr<const Schema>> schemas_;
};

}  // namespace peerloop::llm
