#include "protoagent/protocol/validation.hpp"

#include <charconv>
#include <cstdlib>
#include <sstream>

#include <nlohmann/json.hpp>

#include "protoagent/assets.hpp"

namespace protoagent {
namespace {

using nlohmann::json;

[[noreturn]] void rule_error(const std::string& pointer, const std::string& message) {
  throw Error(ErrorCode::RuleSetError, message, pointer);
}

ValueConstraint parse_constraint(const json& j, const std::string& pointer) {
  if (j.is_array()) {
    if (j.empty()) rule_error(pointer, "allowed token list must not be empty");
    std::set<std::string> tokens;
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_string()) rule_error(pointer + "/" + std::to_string(i), "tokens must be strings");
      tokens.insert(j[i].get<std::string>());
    }
    return tokens;
  }
  if (j.is_object()) {
    for (const auto& [key, _] : j.items()) {
      if (key != "min" && key != "max") rule_error(pointer + "/" + key, "range accepts only min and max");
    }
    if (!j.contains("min") || !j.contains("max") || !j["min"].is_number() || !j["max"].is_number()) {
      rule_error(pointer, "range needs numeric min and max");
    }
    NumericRange range{j["min"].get<double>(), j["max"].get<double>()};
    if (range.min > range.max) rule_error(pointer, "range min exceeds max");
    return range;
  }
  rule_error(pointer, "constraint must be a token list or a {min, max} object");
}

std::optional<double> numeric_payload(const TypedValue& value) {
  if (!value.is_numeric() || payload_problem(value)) return std::nullopt;
  char* end = nullptr;
  double d = std::strtod(value.scalar.c_str(), &end);
  if (end != value.scalar.c_str() + value.scalar.size()) return std::nullopt;
  return d;
}

std::string join_tokens(const std::set<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ", ";
    out += t;
  }
  return out;
}

std::string format_number(double d) {
  std::ostringstream os;
  os << d;
  return os.str();
}

}  // namespace

void ValidationReport::add(Issue issue) {
  if (issue.severity == Severity::Error) ok = false;
  issues.push_back(std::move(issue));
}

bool ValidationReport::has(std::string_view code) const {
  for (const auto& issue : issues) {
    if (issue.code == code) return true;
  }
  return false;
}

std::size_t ValidationReport::error_count() const {
  std::size_t n = 0;
  for (const auto& issue : issues) n += issue.severity == Severity::Error ? 1 : 0;
  return n;
}

void ValidationReport::merge(const ValidationReport& other) {
  for (const auto& issue : other.issues) add(issue);
}

std::optional<std::string> constraint_problem(const ValueConstraint& constraint, const TypedValue& value) {
  if (const auto* tokens = std::get_if<std::set<std::string>>(&constraint)) {
    if (value.type == ValueType::Composite || !tokens->contains(value.scalar)) {
      return "value '" + value.display() + "' is not one of {" + join_tokens(*tokens) + "}";
    }
    return std::nullopt;
  }
  const auto& range = std::get<NumericRange>(constraint);
  auto number = numeric_payload(value);
  if (!number) return "value '" + value.display() + "' is not numeric";
  if (*number < range.min || *number > range.max) {
    return "value " + value.scalar + " is outside [" + format_number(range.min) + ", " +
           format_number(range.max) + "]";
  }
  return std::nullopt;
}

const RuleSet& RuleSet::builtin() {
  static const RuleSet rules = from_json(assets::get("data/rules/ct_rules_v1.json"));
  return rules;
}

RuleSet RuleSet::from_json(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    rule_error("", std::string("rule file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) rule_error("", "rule file must be a JSON object");

  RuleSet rules;
  for (const auto& [key, value] : j.items()) {
    const std::string ptr = "/" + key;
    if (key == "version") {
      if (!value.is_string()) rule_error(ptr, "version must be a string");
      rules.version = value.get<std::string>();
    } else if (key == "description" || key == "$comment") {
      continue;
    } else if (key == "compound_types") {
      if (!value.is_array()) rule_error(ptr, "compound_types must be an array");
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (!value[i].is_string()) rule_error(ptr + "/" + std::to_string(i), "type names must be strings");
        rules.compound_types.insert(value[i].get<std::string>());
      }
    } else if (key == "allowed_values") {
      if (!value.is_object()) rule_error(ptr, "allowed_values must be an object");
      for (const auto& [name, constraint] : value.items()) {
        rules.allowed_values.emplace(name, parse_constraint(constraint, ptr + "/" + name));
      }
    } else if (key == "dependencies") {
      if (!value.is_array()) rule_error(ptr, "dependencies must be an array");
      for (std::size_t i = 0; i < value.size(); ++i) {
        const std::string dptr = ptr + "/" + std::to_string(i);
        const json& d = value[i];
        if (!d.is_object() || !d.contains("when") || !d.contains("require") || !d["when"].is_object() ||
            !d["require"].is_object()) {
          rule_error(dptr, "dependency needs 'when' and 'require' objects");
        }
        DependencyRule rule;
        rule.id = d.value("id", "dependency-" + std::to_string(i));
        for (const auto& [name, cond] : d["when"].items()) {
          if (!cond.is_string()) rule_error(dptr + "/when/" + name, "conditions must be strings");
          if (name == "entity_type") {
            rule.entity_type = cond.get<std::string>();
          } else {
            rule.when_essentials.emplace(name, cond.get<std::string>());
          }
        }
        if (d["require"].empty()) rule_error(dptr + "/require", "require must not be empty");
        for (const auto& [name, constraint] : d["require"].items()) {
          rule.require.emplace(name, parse_constraint(constraint, dptr + "/require/" + name));
        }
        rules.dependencies.push_back(std::move(rule));
      }
    } else if (key == "placement") {
      if (!value.is_object()) rule_error(ptr, "placement must be an object");
      rules.placement.emplace();
      for (const auto& [parent, children] : value.items()) {
        if (!children.is_array()) rule_error(ptr + "/" + parent, "placement entries must be arrays");
        auto& slot = (*rules.placement)[parent];
        for (std::size_t i = 0; i < children.size(); ++i) {
          if (!children[i].is_string()) {
            rule_error(ptr + "/" + parent + "/" + std::to_string(i), "type names must be strings");
          }
          slot.insert(children[i].get<std::string>());
        }
      }
    } else {
      rule_error(ptr, "unknown rule section '" + key + "'");
    }
  }
  return rules;
}

bool RuleSet::is_compound(std::string_view entity_type) const {
  return compound_types.contains(std::string(entity_type));
}

bool RuleSet::placement_allowed(std::string_view parent_type, std::string_view child_type) const {
  if (!placement) return true;
  auto it = placement->find(parent_type);
  return it != placement->end() && it->second.contains(std::string(child_type));
}

std::optional<std::string> RuleSet::value_problem(std::string_view essential_name,
                                                  const TypedValue& value) const {
  auto it = allowed_values.find(essential_name);
  if (it == allowed_values.end()) return std::nullopt;
  return constraint_problem(it->second, value);
}

ValidationReport validate_structure(const ProtocolDocument& doc, const RuleSet& rules) {
  ValidationReport report;
  std::vector<std::string> path_stack;
  std::function<void(const Entity&)> walk = [&](const Entity& entity) {
    path_stack.push_back(path_stack.empty() ? entity.id : path_stack.back() + "/" + entity.id);
    const std::string path = path_stack.back();

    if (rules.is_compound(entity.entity_type) && entity.children.empty()) {
      report.add({Severity::Error, "EMPTY_COMPOUND", path,
                  entity.entity_type + " '" + entity.name + "' has no children", std::nullopt});
    }
    for (const auto& essential : entity.essentials) {
      if (auto problem = rules.value_problem(essential.name, essential.value)) {
        report.add({Severity::Error, "VALUE_NOT_ALLOWED", path + "#" + essential.name, *problem, std::nullopt});
      }
    }
    for (const auto& rule : rules.dependencies) {
      if (rule.entity_type && *rule.entity_type != entity.entity_type) continue;
      bool triggered = true;
      for (const auto& [name, expected] : rule.when_essentials) {
        const Essential* e = entity.find_essential(name);
        triggered = triggered && e && e->value.type != ValueType::Composite && e->value.scalar == expected;
      }
      if (!triggered) continue;
      for (const auto& [name, constraint] : rule.require) {
        const Essential* e = entity.find_essential(name);
        if (!e) {
          report.add({Severity::Error, "DEPENDENCY_VIOLATION", path + "#" + name,
                      "rule " + rule.id + " requires essential " + name, std::nullopt});
        } else if (auto problem = constraint_problem(constraint, e->value)) {
          report.add({Severity::Error, "DEPENDENCY_VIOLATION", path + "#" + name,
                      "rule " + rule.id + ": " + *problem, std::nullopt});
        }
      }
    }
    for (const auto& child : entity.children) {
      if (!rules.placement_allowed(entity.entity_type, child.entity_type)) {
        report.add({Severity::Error, "PLACEMENT_NOT_ALLOWED", path + "/" + child.id,
                    child.entity_type + " may not be placed under " + entity.entity_type, std::nullopt});
      }
      walk(child);
    }
    path_stack.pop_back();
  };
  walk(doc.root);
  return report;
}

}  // namespace protoagent
