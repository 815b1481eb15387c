#include "protoagent/protocol/vocabulary.hpp"

#include <nlohmann/json.hpp>

#include "protoagent/assets.hpp"
#include "protoagent/error.hpp"

namespace protoagent {

const Vocabulary& Vocabulary::builtin() {
  static const Vocabulary vocabulary = from_json(assets::get("data/schema/vocabulary.json"));
  return vocabulary;
}

Vocabulary Vocabulary::from_json(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("vocabulary is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("entity_types") || !j["entity_types"].is_object()) {
    throw Error(ErrorCode::ConfigError, "vocabulary needs an 'entity_types' object", "/entity_types");
  }
  Vocabulary v;
  v.version_ = j.value("version", "");
  for (const auto& [type, essentials] : j["entity_types"].items()) {
    auto& slot = v.types_[type];
    if (!essentials.is_object()) {
      throw Error(ErrorCode::ConfigError, "essential map must be an object", "/entity_types/" + type);
    }
    for (const auto& [name, tag] : essentials.items()) {
      auto vt = tag.is_string() ? value_type_from_string(tag.get<std::string>()) : std::nullopt;
      if (!vt) {
        throw Error(ErrorCode::ConfigError, "unknown value type", "/entity_types/" + type + "/" + name);
      }
      slot.emplace(name, *vt);
    }
  }
  return v;
}

bool Vocabulary::has_type(std::string_view entity_type) const {
  return types_.find(entity_type) != types_.end();
}

std::optional<ValueType> Vocabulary::essential_type(std::string_view entity_type,
                                                    std::string_view essential_name) const {
  auto t = types_.find(entity_type);
  if (t == types_.end()) return std::nullopt;
  auto e = t->second.find(essential_name);
  if (e == t->second.end()) return std::nullopt;
  return e->second;
}

std::set<std::string> Vocabulary::types() const {
  std::set<std::string> out;
  for (const auto& [type, _] : types_) out.insert(type);
  return out;
}

}  // namespace protoagent
