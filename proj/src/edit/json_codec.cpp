#include "protoagent/edit/json_codec.hpp"

#include "protoagent/error.hpp"

namespace protoagent {
namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& pointer, const std::string& message) {
  throw Error(ErrorCode::JsonSchemaError, message, pointer.empty() ? "/" : pointer);
}

const json& member(const json& j, const char* key, const std::string& pointer) {
  if (!j.is_object()) schema_error(pointer, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) schema_error(pointer + "/" + key, std::string("missing required field '") + key + "'");
  return *it;
}

std::string string_member(const json& j, const char* key, const std::string& pointer) {
  const json& v = member(j, key, pointer);
  if (!v.is_string() || v.get_ref<const std::string&>().empty()) {
    schema_error(pointer + "/" + key, std::string("'") + key + "' must be a non-empty string");
  }
  return v.get<std::string>();
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed, const std::string& pointer) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) schema_error(pointer + "/" + key, "unexpected field '" + key + "'");
  }
}

json node_to_json(const CompositeNode& node) {
  json j{{"name", node.name}};
  if (node.children.empty()) {
    j["text"] = node.text;
  } else {
    json children = json::array();
    for (const auto& c : node.children) children.push_back(node_to_json(c));
    j["children"] = std::move(children);
  }
  return j;
}

CompositeNode node_from_json(const json& j, const std::string& pointer) {
  if (!j.is_object()) schema_error(pointer, "composite node must be an object");
  reject_unknown(j, {"name", "text", "children"}, pointer);
  CompositeNode node;
  node.name = string_member(j, "name", pointer);
  if (j.contains("text")) {
    if (!j["text"].is_string()) schema_error(pointer + "/text", "text must be a string");
    node.text = j["text"].get<std::string>();
  }
  if (j.contains("children")) {
    const json& children = j["children"];
    if (!children.is_array()) schema_error(pointer + "/children", "children must be an array");
    for (std::size_t i = 0; i < children.size(); ++i) {
      node.children.push_back(node_from_json(children[i], pointer + "/children/" + std::to_string(i)));
    }
  }
  return node;
}

}  // namespace

json to_json(const TypedValue& value) {
  json j{{"type", std::string(to_string(value.type))}};
  if (value.type == ValueType::Composite) {
    json nodes = json::array();
    for (const auto& n : value.composite) nodes.push_back(node_to_json(n));
    j["payload"] = std::move(nodes);
  } else {
    j["payload"] = value.scalar;
  }
  return j;
}

TypedValue typed_value_from_json(const json& j, const std::string& pointer) {
  if (!j.is_object()) schema_error(pointer, "typed value must be an object {type, payload}");
  reject_unknown(j, {"type", "payload"}, pointer);
  const std::string tag = string_member(j, "type", pointer);
  auto type = value_type_from_string(tag);
  if (!type) schema_error(pointer + "/type", "unknown value type '" + tag + "'");
  TypedValue value;
  value.type = *type;
  const json& payload = member(j, "payload", pointer);
  if (*type == ValueType::Composite) {
    if (!payload.is_array()) schema_error(pointer + "/payload", "Composite payload must be an array of nodes");
    for (std::size_t i = 0; i < payload.size(); ++i) {
      value.composite.push_back(node_from_json(payload[i], pointer + "/payload/" + std::to_string(i)));
    }
  } else if (payload.is_string()) {
    value.scalar = payload.get<std::string>();
  } else if (payload.is_boolean() && *type == ValueType::Boolean) {
    value.scalar = payload.get<bool>() ? "true" : "false";
  } else if (payload.is_number() && value.is_numeric()) {
    value.scalar = payload.dump();
  } else {
    schema_error(pointer + "/payload", tag + " payload must be a string");
  }
  if (auto problem = payload_problem(value)) schema_error(pointer + "/payload", *problem);
  return value;
}

json to_json(const Action& action) {
  if (const auto* set = std::get_if<SetEssential>(&action)) {
    return {{"op", "set_essential"},
            {"entity_id", set->entity_id},
            {"essential_name", set->essential_name},
            {"new_value", to_json(set->new_value)}};
  }
  if (const auto* add = std::get_if<AddEntity>(&action)) {
    json overrides = json::array();
    for (const auto& o : add->overrides) {
      overrides.push_back({{"essential_name", o.essential_name}, {"value", to_json(o.value)}});
    }
    json j{{"op", "add_entity"},
           {"template_entity_id", add->template_entity_id},
           {"parent_id", add->parent_id},
           {"overrides", std::move(overrides)}};
    if (add->new_name) j["new_name"] = *add->new_name;
    return j;
  }
  return {{"op", "delete_entity"}, {"entity_id", std::get<DeleteEntity>(action).entity_id}};
}

Action action_from_json(const json& j, const std::string& pointer) {
  const std::string op = string_member(j, "op", pointer);
  if (op == "set_essential") {
    reject_unknown(j, {"op", "entity_id", "essential_name", "new_value"}, pointer);
    return SetEssential{string_member(j, "entity_id", pointer), string_member(j, "essential_name", pointer),
                        typed_value_from_json(member(j, "new_value", pointer), pointer + "/new_value")};
  }
  if (op == "add_entity") {
    reject_unknown(j, {"op", "template_entity_id", "parent_id", "overrides", "new_name"}, pointer);
    AddEntity add{string_member(j, "template_entity_id", pointer), string_member(j, "parent_id", pointer), {}, {}};
    if (j.contains("overrides")) {
      const json& overrides = j["overrides"];
      if (!overrides.is_array()) schema_error(pointer + "/overrides", "overrides must be an array");
      for (std::size_t i = 0; i < overrides.size(); ++i) {
        const std::string p = pointer + "/overrides/" + std::to_string(i);
        reject_unknown(overrides[i], {"essential_name", "value"}, p);
        add.overrides.push_back(
            {string_member(overrides[i], "essential_name", p), typed_value_from_json(member(overrides[i], "value", p), p + "/value")});
      }
    }
    if (j.contains("new_name") && !j["new_name"].is_null()) add.new_name = string_member(j, "new_name", pointer);
    return add;
  }
  if (op == "delete_entity") {
    reject_unknown(j, {"op", "entity_id"}, pointer);
    return DeleteEntity{string_member(j, "entity_id", pointer)};
  }
  schema_error(pointer + "/op", "unknown op '" + op + "'");
}

json actions_to_json(const std::vector<Action>& actions) {
  json out = json::array();
  for (const auto& a : actions) out.push_back(to_json(a));
  return out;
}

std::vector<Action> actions_from_json(const json& j, const std::string& pointer) {
  if (!j.is_array()) schema_error(pointer, "actions must be an array");
  std::vector<Action> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(action_from_json(j[i], pointer + "/" + std::to_string(i)));
  return out;
}

json to_json(const Essential& essential) { return {{"name", essential.name}, {"value", to_json(essential.value)}}; }

json to_json(const EntityRef& ref) {
  return {{"id", ref.id},
          {"name", ref.name},
          {"entity_type", ref.entity_type},
          {"parent_id", ref.parent_id},
          {"depth", ref.depth}};
}

json to_json(const SideEffect& effect) {
  return {{"kind", std::string(to_string(effect.kind))}, {"entity_id", effect.entity_id}, {"detail", effect.detail}};
}

json to_json(const ValidationReport& report) {
  json issues = json::array();
  for (const auto& issue : report.issues) {
    json i{{"severity", issue.severity == Severity::Error ? "Error" : "Warning"},
           {"code", issue.code},
           {"path", issue.path},
           {"message", issue.message}};
    if (issue.location) {
      i["line"] = issue.location->line;
      i["column"] = issue.location->column;
    }
    issues.push_back(std::move(i));
  }
  return {{"ok", report.ok}, {"issues", std::move(issues)}};
}

}  // namespace protoagent
