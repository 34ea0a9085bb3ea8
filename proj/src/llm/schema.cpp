#include "peerloop/llm/schema.hpp"

#include <algorithm>
#include <mutex>
#include <set>

#include <fmt/format.h>

#include "peerloop/common/error.hpp"

namespace peerloop::llm {

using nlohmann::json;

struct Schema::Node {
    Type type = Type::kAny;
    std::vector<Field> fields;
    bool allow_additional = false;
    std::vector<Schema> children;  // items / map values / alternatives
    std::size_t min_count = 0;
    std::optional<std::size_t> max_count;
    std::vector<std::string> required_keys;
    std::vector<std::string> enum_values;
    bool non_empty = false;
    std::optional<double> min;
    std::optional<double> max;
};

Schema Schema::object(std::vector<Field> fields, bool allow_additional) {
    auto n = std::make_shared<Node>();
    n->type = Type::kObject;
    n->fields = std::move(fields);
    n->allow_additional = allow_additional;
    return Schema(n);
}

Schema Schema::map(Schema values, std::size_t min_entries, std::vector<std::string> required_keys) {
    auto n = std::make_shared<Node>();
    n->type = Type::kMap;
    n->children.push_back(std::move(values));
    n->min_count = min_entries;
    n->required_keys = std::move(required_keys);
    return Schema(n);
}

Schema Schema::array(Schema items, std::size_t min_items, std::optional<std::size_t> max_items) {
    auto n = std::make_shared<Node>();
    n->type = Type::kArray;
    n->children.push_back(std::move(items));
    n->min_count = min_items;
    n->max_count = max_items;
    return Schema(n);
}

Schema Schema::string(bool non_empty) {
    auto n = std::make_shared<Node>();
    n->type = Type::kString;
    n->non_empty = non_empty;
    return Schema(n);
}

Schema Schema::string_enum(std::vector<std::string> values) {
    auto n = std::make_shared<Node>();
    n->type = Type::kString;
    n->enum_values = std::move(values);
    return Schema(n);
}

Schema Schema::integer(std::optional<long long> min, std::optional<long long> max) {
    auto n = std::make_shared<Node>();
    n->type = Type::kInteger;
    if (min) n->min = static_cast<double>(*min);
    if (max) n->max = static_cast<double>(*max);
    return Schema(n);
}

Schema Schema::number(std::optional<double> min, std::optional<double> max) {
    auto n = std::make_shared<Node>();
    n->type = Type::kNumber;
    n->min = min;
    n->max = max;
    return Schema(n);
}

Schema Schema::boolean() {
    auto n = std::make_shared<Node>();
    n->type = Type::kBoolean;
    return Schema(n);
}

Schema Schema::any() { return Schema(std::make_shared<Node>()); }

Schema Schema::one_of(std::vector<Schema> alternatives) {
    auto n = std::make_shared<Node>();
    n->type = Type::kOneOf;
    n->children = std::move(alternatives);
    return Schema(n);
}

std::vector<std::string> Schema::validate(const json& doc) const {
    std::vector<std::string> errors;
    check(*node_, doc, "", errors);
    return errors;
}

namespace {

std::string at(const std::string& path) { return path.empty() ? "/" : path; }

void check_range(double v, const std::optional<double>& min, const std::optional<double>& max,
                 const std::string& path, std::vector<std::string>& errors) {
    if ((min && v < *min) || (max && v > *max)) {
        errors.push_back(fmt::format("{}: value {} outside [{}, {}]", at(path), v,
                                     min ? fmt::format("{}", *min) : "-inf", max ? fmt::format("{}", *max) : "inf"));
    }
}

}  // namespace

void Schema::check(const Node& n, const json& doc, const std::string& path, std::vector<std::string>& errors) {
    switch (n.type) {
        case Type::kAny:
            return;
        case Type::kObject: {
            if (!doc.is_object()) {
                errors.push_back(at(path) + ": expected object");
                return;
            }
            std::set<std::string> known;
            for (const auto& f : n.fields) {
                known.insert(f.name);
                auto it = doc.find(f.name);
                if (it == doc.end()) {
                    if (f.required) errors.push_back(fmt::format("{}: missing required key '{}'", at(path), f.name));
                    continue;
                }
                check(*f.schema.node_, *it, path + "/" + f.name, errors);
            }
            if (!n.allow_additional) {
                for (const auto& [key, value] : doc.items()) {
                    if (!known.count(key)) errors.push_back(fmt::format("{}: unexpected key '{}'", at(path), key));
                }
            }
            return;
        }
        case Type::kMap: {
            if (!doc.is_object()) {
                errors.push_back(at(path) + ": expected object");
                return;
            }
            if (doc.size() < n.min_count)
                errors.push_back(fmt::format("{}: expected at least {} entries", at(path), n.min_count));
            for (const auto& key : n.required_keys) {
                if (!doc.contains(key)) errors.push_back(fmt::format("{}: missing required key '{}'", at(path), key));
            }
            for (const auto& [key, value] : doc.items()) check(*n.children[0].node_, value, path + "/" + key, errors);
            return;
        }
        case Type::kArray: {
            if (!doc.is_array()) {
                errors.push_back(at(path) + ": expected array");
                return;
            }
            if (doc.size() < n.min_count)
                errors.push_back(fmt::format("{}: expected at least {} items", at(path), n.min_count));
            if (n.max_count && doc.size() > *n.max_count)
                errors.push_back(fmt::format("{}: expected at most {} items", at(path), *n.max_count));
            for (std::size_t i = 0; i < doc.size(); ++i)
                check(*n.children[0].node_, doc[i], fmt::format("{}/{}", path, i), errors);
            return;
        }
        case Type::kString: {
            if (!doc.is_string()) {
                errors.push_back(at(path) + ": expected string");
                return;
            }
            const auto& s = doc.get_ref<const std::string&>();
            if (n.non_empty && s.find_first_not_of(" \t\r\n") == std::string::npos)
                errors.push_back(at(path) + ": must be non-empty");
            if (!n.enum_values.empty() &&
                std::find(n.enum_values.begin(), n.enum_values.end(), s) == n.enum_values.end()) {
                errors.push_back(fmt::format("{}: '{}' not one of [{}]", at(path), s, fmt::join(n.enum_values, ", ")));
            }
            return;
        }
        case Type::kInteger: {
            if (!doc.is_number_integer()) {
                // 3.0 is accepted as an integer; 3.5 is not.
                if (doc.is_number_float() && doc.get<double>() == static_cast<double>(static_cast<long long>(doc.get<double>()))) {
                    check_range(doc.get<double>(), n.min, n.max, path, errors);
                    return;
                }
                errors.push_back(at(path) + ": expected integer");
                return;
            }
            check_range(static_cast<double>(doc.get<long long>()), n.min, n.max, path, errors);
            return;
        }
        case Type::kNumber: {
            if (!doc.is_number()) {
                errors.push_back(at(path) + ": expected number");
                return;
            }
            check_range(doc.get<double>(), n.min, n.max, path, errors);
            return;
        }
        case Type::kBoolean:
            if (!doc.is_boolean()) errors.push_back(at(path) + ": expected boolean");
            return;
        case Type::kOneOf: {
            std::size_t matches = 0;
            std::vector<std::string> first_errors;
            for (const auto& alt : n.children) {
                std::vector<std::string> e;
                check(*alt.node_, doc, path, e);
                if (e.empty()) ++matches;
                else if (first_errors.empty()) first_errors = std::move(e);
            }
            if (matches != 1) {
                errors.push_back(fmt::format("{}: matched {} of {} alternatives", at(path), matches, n.children.size()));
                if (matches == 0) errors.insert(errors.end(), first_errors.begin(), first_errors.end());
            }
            return;
        }
    }
}

json Schema::to_json_schema() const { return export_node(*node_); }

json Schema::export_node(const Node& n) {
    json j;
    auto put_range = [&](json& out) {
        if (n.min) out["minimum"] = *n.min;
        if (n.max) out["maximum"] = *n.max;
    };
    switch (n.type) {
        case Type::kAny:
            return json::object();
        case Type::kObject: {
            j["type"] = "object";
            j["properties"] = json::object();
            json required = json::array();
            for (const auto& f : n.fields) {
                j["properties"][f.name] = export_node(*f.schema.node_);
                if (f.required) required.push_back(f.name);
            }
            j["required"] = required;
            j["additionalProperties"] = n.allow_additional;
            return j;
        }
        case Type::kMap:
            j["type"] = "object";
            j["additionalProperties"] = export_node(*n.children[0].node_);
            if (n.min_count) j["minProperties"] = n.min_count;
            if (!n.required_keys.empty()) j["required"] = n.required_keys;
            return j;
        case Type::kArray:
            j["type"] = "array";
            j["items"] = export_node(*n.children[0].node_);
            if (n.min_count) j["minItems"] = n.min_count;
            if (n.max_count) j["maxItems"] = *n.max_count;
            return j;
        case Type::kString:
            j["type"] = "string";
            if (n.non_empty) j["minLength"] = 1;
            if (!n.enum_values.empty()) j["enum"] = n.enum_values;
            return j;
        case Type::kInteger:
            j["type"] = "integer";
            put_range(j);
            return j;
        case Type::kNumber:
            j["type"] = "number";
            put_range(j);
            return j;
        case Type::kBoolean:
            j["type"] = "boolean";
            return j;
        case Type::kOneOf: {
            j["oneOf"] = json::array();
            for (const auto& alt : n.children) j["oneOf"].push_back(export_node(*alt.node_));
            return j;
        }
    }
    return j;
}

void SchemaRegistry::add(std::string id, Schema schema) {
    std::unique_lock lock(mutex_);
    schemas_[std::move(id)] = std::make_shared<const Schema>(std::move(schema));
}

Schema SchemaRegistry::get(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = schemas_.find(id);
    if (it == schemas_.end()) throw Error(ErrorCode::kUnknownSchema, "no schema registered as '" + id + "'");
    return *it->second;
}

bool SchemaRegistry::contains(const std::string& id) const {
    std::shared_lock lock(mutex_);
    return schemas_.count(id) > 0;
}

std::vector<std::string> SchemaRegistry::ids() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, s] : schemas_) out.push_back(id);
    return out;
}

}  // namespace peerloop::llm
