#include "protoagent/agent/memory.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "protoagent/assets.hpp"
#include "protoagent/error.hpp"

namespace protoagent {
namespace {

[[noreturn]] void bad(const std::string& where, const std::string& message) {
  throw Error(ErrorCode::ConfigError, message, where);
}

std::string replace_all(std::string text, std::string_view from, std::string_view to) {
  for (auto pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
    text.replace(pos, from.size(), to);
  }
  return text;
}

std::size_t depth_of(const std::string& line) {
  std::size_t spaces = line.find_first_not_of(' ');
  return spaces == std::string::npos ? 0 : spaces / 2;
}

std::string instance_line(const Entity& e, const TypeDescription& type) {
  std::string values;
  for (const auto& key : type.key_essentials) {
    const Essential* essential = e.find_essential(key.essential);
    if (!essential) continue;
    if (!values.empty()) values += ", ";
    values += key.label + " " + essential->value.display();
    if (!key.unit.empty()) values += " " + key.unit;
  }
  if (values.empty()) return {};
  return "  - " + e.id + " (" + e.name + "): " + values;
}

}  // namespace

const DescriptionCatalog& DescriptionCatalog::builtin() {
  static const DescriptionCatalog catalog = from_json(assets::get("data/descriptions/entity_descriptions_v1.json"));
  return catalog;
}

DescriptionCatalog DescriptionCatalog::from_json(std::string_view text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) bad("/", "description catalog is not a JSON object");
  DescriptionCatalog c;
  for (const auto& [key, value] : j.items()) {
    if (key == "version" || key == "generic") {
      if (!value.is_string()) bad("/" + key, key + " must be a string");
    } else if (key != "types" && key != "$comment") {
      bad("/" + key, "unknown key '" + key + "'");
    }
  }
  c.version = j.value("version", "");
  c.generic = j.value("generic", c.generic);
  if (!j.contains("types")) return c;
  if (!j["types"].is_object()) bad("/types", "types must be an object");
  for (const auto& [type, entry] : j["types"].items()) {
    const std::string where = "/types/" + type;
    if (!entry.is_object() || !entry.contains("description") || !entry["description"].is_string()) {
      bad(where + "/description", "each type needs a description string");
    }
    TypeDescription d{entry["description"].get<std::string>(), {}};
    if (entry.contains("key_essentials")) {
      const auto& keys = entry["key_essentials"];
      if (!keys.is_array()) bad(where + "/key_essentials", "key_essentials must be an array");
      for (std::size_t i = 0; i < keys.size(); ++i) {
        const auto& k = keys[i];
        if (!k.is_array() || k.size() < 2 || k.size() > 3) {
          bad(where + "/key_essentials/" + std::to_string(i), "expected [essential, label] or [essential, label, unit]");
        }
        d.key_essentials.push_back({k[0].get<std::string>(), k[1].get<std::string>(),
                                    k.size() == 3 ? k[2].get<std::string>() : std::string()});
      }
    }
    c.types.emplace(type, std::move(d));
  }
  return c;
}

MemoryContext build_memory(const ProtocolDocument& doc, const DescriptionCatalog& catalog) {
  MemoryContext memory;
  memory.simplified_tree = render_simplified_tree(doc);
  std::map<std::string, std::vector<std::string>> instances;
  visit_preorder(doc.root, [&](const Entity& e, const Entity*, std::size_t) {
    auto& lines = instances[e.entity_type];
    auto it = catalog.types.find(e.entity_type);
    if (it == catalog.types.end()) return;
    if (auto line = instance_line(e, it->second); !line.empty()) lines.push_back(std::move(line));
  });
  for (const auto& [type, lines] : instances) {
    auto it = catalog.types.find(type);
    std::string text = it != catalog.types.end() ? it->second.description : replace_all(catalog.generic, "{type}", type);
    for (const auto& line : lines) text += "\n" + line;
    memory.entity_descriptions[type] = std::move(text);
  }
  return memory;
}

std::string elide_tree(const SimplifiedTree& tree, std::size_t max_chars) {
  std::string full = tree.text();
  if (full.size() <= max_chars) return full;
  std::size_t max_depth = 0;
  for (const auto& line : tree.lines) max_depth = std::max(max_depth, depth_of(line));
  if (max_depth == 0) return full;
  std::string out;
  for (std::size_t cut = max_depth; cut >= 1; --cut) {
    out.clear();
    std::size_t run = 0;
    auto flush = [&] {
      if (run == 0) return;
      out += std::string(cut * 2, ' ') + "... (" + std::to_string(run) + (run == 1 ? " entity" : " entities") +
             " elided)\n";
      run = 0;
    };
    for (const auto& line : tree.lines) {
      if (depth_of(line) >= cut) {
        ++run;
      } else {
        flush();
        out += line + "\n";
      }
    }
    flush();
    if (out.size() <= max_chars) break;
  }
  return out;
}

std::string render_memory(const MemoryContext& memory, std::size_t max_tree_chars) {
  std::string out = "# Entity descriptions\n";
  for (const auto& [type, text] : memory.entity_descriptions) out += type + ": " + text + "\n";
  out += "\n# Protocol structure (entity_type | name | id)\n";
  out += elide_tree(memory.simplified_tree, max_tree_chars);
  return out;
}

}  // namespace protoagent
