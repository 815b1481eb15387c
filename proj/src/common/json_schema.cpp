#include "protoagent/common/json_schema.hpp"

#include <rapidjson/document.h>
#include <rapidjson/schema.h>
#include <rapidjson/stringbuffer.h>

#include "protoagent/assets.hpp"

namespace protoagent {
namespace {

rapidjson::Document to_rapid(const nlohmann::json& j) {
  rapidjson::Document d;
  const std::string text = j.dump();
  d.Parse(text.c_str(), text.size());
  return d;
}

std::string pointer_string(const rapidjson::Pointer& p) {
  rapidjson::StringBuffer sb;
  p.Stringify(sb);
  return sb.GetString();
}

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

std::string describe(const std::string& keyword, const nlohmann::json& rule) {
  if (keyword == "type") return "expected type " + rule.dump();
  if (keyword == "enum") return "value must be one of " + rule.dump();
  if (keyword == "additionalProperties") return "unexpected property";
  if (keyword == "minLength") return "string shorter than " + rule.dump();
  if (keyword == "minItems") return "fewer than " + rule.dump() + " items";
  if (keyword == "maxItems") return "more than " + rule.dump() + " items";
  if (keyword == "minimum") return "value below " + rule.dump();
  if (keyword == "maximum") return "value above " + rule.dump();
  if (keyword == "oneOf" || keyword == "anyOf") return "value matches none of the allowed shapes";
  return "schema keyword '" + keyword + "' violated";
}

}  // namespace

struct JsonSchema::Impl {
  rapidjson::Document source;
  std::unique_ptr<rapidjson::SchemaDocument> schema;
};

JsonSchema::JsonSchema(const nlohmann::json& schema) : schema_(schema), impl_(std::make_unique<Impl>()) {
  impl_->source = to_rapid(schema);
  impl_->schema = std::make_unique<rapidjson::SchemaDocument>(impl_->source);
}

JsonSchema JsonSchema::from_asset(std::string_view asset_path) {
  try {
    return JsonSchema(nlohmann::json::parse(assets::get(asset_path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("schema asset is not JSON: ") + e.what(), std::string(asset_path));
  }
}

JsonSchema::JsonSchema(JsonSchema&&) noexcept = default;
JsonSchema& JsonSchema::operator=(JsonSchema&&) noexcept = default;
JsonSchema::~JsonSchema() = default;

std::optional<SchemaProblem> JsonSchema::check(const nlohmann::json& value) const {
  rapidjson::Document doc = to_rapid(value);
  rapidjson::SchemaValidator validator(*impl_->schema);
  if (doc.Accept(validator)) return std::nullopt;

  SchemaProblem problem;
  problem.pointer = pointer_string(validator.GetInvalidDocumentPointer());
  problem.keyword = validator.GetInvalidSchemaKeyword();
  const nlohmann::json::json_pointer schema_ptr(pointer_string(validator.GetInvalidSchemaPointer()));
  const nlohmann::json* rule_owner = schema_.contains(schema_ptr) ? &schema_.at(schema_ptr) : nullptr;
  const nlohmann::json rule =
      rule_owner && rule_owner->contains(problem.keyword) ? rule_owner->at(problem.keyword) : nlohmann::json();

  if (problem.keyword == "required" && rule.is_array()) {
    // Point at the first missing member rather than its owner.
    const nlohmann::json::json_pointer owner(problem.pointer);
    const nlohmann::json* object = value.contains(owner) ? &value.at(owner) : nullptr;
    for (const auto& name : rule) {
      if (object && object->is_object() && !object->contains(name.get<std::string>())) {
        problem.pointer += "/" + escape_token(name.get<std::string>());
        problem.message = "missing required property '" + name.get<std::string>() + "'";
        break;
      }
    }
  }
  if (problem.keyword == "additionalProperties" && rule_owner && rule_owner->contains("properties")) {
    const nlohmann::json::json_pointer owner(problem.pointer);
    const nlohmann::json* object = value.contains(owner) ? &value.at(owner) : nullptr;
    if (object && object->is_object()) {
      for (const auto& [key, _] : object->items()) {
        if (!rule_owner->at("properties").contains(key)) {
          problem.pointer += "/" + escape_token(key);
          problem.message = "unexpected property '" + key + "'";
          break;
        }
      }
    }
  }
  if (problem.message.empty()) problem.message = describe(problem.keyword, rule);
  if (problem.pointer.empty()) problem.pointer = "/";
  return problem;
}

void JsonSchema::require(const nlohmann::json& value, ErrorCode code) const {
  if (auto problem = check(value)) throw Error(code, problem->message, problem->pointer);
}

}  // namespace protoagent
