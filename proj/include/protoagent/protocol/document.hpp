#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace protoagent {

enum class ValueType { Decimal, Integer, Boolean, String, EnumToken, Composite };

std::string_view to_string(ValueType type);
std::optional<ValueType> value_type_from_string(std::string_view name);

/// One element of a Composite payload. A node carries either text (leaf) or
/// child nodes, never both.
struct CompositeNode {
  std::string name;
  std::string text;
  std::vector<CompositeNode> children;

  bool operator==(const CompositeNode&) const;
};

struct TypedValue {
  ValueType type = ValueType::String;
  std::string scalar;                   // every type except Composite
  std::vector<CompositeNode> composite; // Composite only

  static TypedValue decimal(std::string text);
  static TypedValue integer(std::string text);
  static TypedValue boolean(bool value);
  static TypedValue string(std::string text);
  static TypedValue token(std::string text);
  static TypedValue compound(std::vector<CompositeNode> nodes);

  bool is_numeric() const { return type == ValueType::Decimal || type == ValueType::Integer; }

  /// Human-readable rendering used in prompts and plan text.
  std::string display() const;

  bool operator==(const TypedValue&) const = default;
};

/// Empty when the payload matches its declared type, otherwise the reason.
std::optional<std::string> payload_problem(const TypedValue& value);

struct Essential {
  std::string name;
  TypedValue value;

  bool operator==(const Essential&) const = default;
};

struct Entity {
  std::string id;
  std::string name;
  std::string entity_type;
  std::vector<Essential> essentials;
  std::vector<Entity> children;

  const Essential* find_essential(std::string_view essential_name) const;
  Essential* find_essential(std::string_view essential_name);

  bool operator==(const Entity&) const;
};

inline constexpr std::string_view kRootEntityType = "ScanProtocol";
inline constexpr std::string_view kSchemaVersion = "1.0";

/// Immutable-by-convention value: edits always build a new document.
struct ProtocolDocument {
  std::string schema_version{kSchemaVersion};
  Entity root;
  std::optional<std::string> source_name;  // provenance only, not serialized

  /// Structural equality; ignores source_name.
  bool operator==(const ProtocolDocument& other) const {
    return schema_version == other.schema_version && root == other.root;
  }
};

/// Index path from the root: {} is the root, {0, 2} the third child of the
/// root's first child.
using EntityPath = std::vector<std::size_t>;

struct EntityLocation {
  const Entity* entity = nullptr;
  const Entity* parent = nullptr;
  EntityPath path;
  std::size_t depth = 0;
};

std::optional<EntityLocation> locate(const ProtocolDocument& doc, std::string_view id);
const Entity* find_entity(const ProtocolDocument& doc, std::string_view id);
Entity& entity_at(Entity& root, const EntityPath& path);
const Entity& entity_at(const Entity& root, const EntityPath& path);

/// Ids from the root down to `id`, joined by '/'; empty when absent.
std::string id_path(const ProtocolDocument& doc, std::string_view id);

std::size_t entity_count(const Entity& root);

/// Preorder visit; `depth` is 0 for the root.
void visit_preorder(const Entity& root,
                    const std::function<void(const Entity&, const Entity* parent, std::size_t depth)>& fn);

std::vector<std::string> collect_ids(const Entity& root);

}  // namespace protoagent
