#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "protoagent/protocol/document.hpp"
#include "protoagent/protocol/simplified_tree.hpp"

namespace protoagent {

struct KeyEssential {
  std::string essential;
  std::string label;
  std::string unit;
};

struct TypeDescription {
  std::string description;
  std::vector<KeyEssential> key_essentials;
};

struct DescriptionCatalog {
  std::string version;
  std::string generic = "A {type} entity of the scan protocol.";
  std::map<std::string, TypeDescription, std::less<>> types;

  static const DescriptionCatalog& builtin();
  /// Throws Error(ConfigError).
  static DescriptionCatalog from_json(std::string_view text);
};

struct MemoryContext {
  std::map<std::string, std::string> entity_descriptions;  // entity_type -> text
  SimplifiedTree simplified_tree;
};

MemoryContext build_memory(const ProtocolDocument& doc, const DescriptionCatalog& catalog = DescriptionCatalog::builtin());

/// Prompt rendering of the memory. When the tree exceeds `max_tree_chars`,
/// the deepest levels are elided first.
std::string render_memory(const MemoryContext& memory, std::size_t max_tree_chars);
std::string elide_tree(const SimplifiedTree& tree, std::size_t max_chars);

}  // namespace protoagent
