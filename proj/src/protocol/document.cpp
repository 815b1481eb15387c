#include "protoagent/protocol/document.hpp"

#include <array>
#include <cctype>
#include <utility>

namespace protoagent {
namespace {

constexpr std::array<std::pair<ValueType, std::string_view>, 6> kValueTypeNames{{
    {ValueType::Decimal, "Decimal"},
    {ValueType::Integer, "Integer"},
    {ValueType::Boolean, "Boolean"},
    {ValueType::String, "String"},
    {ValueType::EnumToken, "EnumToken"},
    {ValueType::Composite, "Composite"},
}};

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

bool is_integer_text(std::string_view s) {
  if (!s.empty() && s.front() == '-') s.remove_prefix(1);
  return all_digits(s);
}

bool is_decimal_text(std::string_view s) {
  if (!s.empty() && s.front() == '-') s.remove_prefix(1);
  auto exp = s.find_first_of("eE");
  std::string_view mantissa = s.substr(0, exp);
  auto dot = mantissa.find('.');
  if (dot == std::string_view::npos) {
    if (!all_digits(mantissa)) return false;
  } else if (!all_digits(mantissa.substr(0, dot)) || !all_digits(mantissa.substr(dot + 1))) {
    return false;
  }
  if (exp == std::string_view::npos) return true;
  std::string_view e = s.substr(exp + 1);
  if (!e.empty() && (e.front() == '+' || e.front() == '-')) e.remove_prefix(1);
  return all_digits(e);
}

bool is_token_text(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

bool is_node_name(std::string_view s) {
  if (s.empty()) return false;
  auto first = static_cast<unsigned char>(s.front());
  if (!std::isalpha(first) && first != '_') return false;
  for (char c : s) {
    auto u = static_cast<unsigned char>(c);
    if (!std::isalnum(u) && c != '_' && c != '-' && c != '.') return false;
  }
  return true;
}

std::optional<std::string> node_problem(const CompositeNode& node) {
  if (!is_node_name(node.name)) return "invalid composite element name '" + node.name + "'";
  if (!node.children.empty() && !node.text.empty()) {
    return "composite element '" + node.name + "' mixes text and child elements";
  }
  for (const auto& child : node.children) {
    if (auto problem = node_problem(child)) return problem;
  }
  return std::nullopt;
}

void display_nodes(const std::vector<CompositeNode>& nodes, std::string& out) {
  bool first = true;
  for (const auto& node : nodes) {
    if (!first) out += ", ";
    first = false;
    out += node.name;
    if (!node.children.empty()) {
      out += "{";
      display_nodes(node.children, out);
      out += "}";
    } else {
      out += "=" + node.text;
    }
  }
}

template <typename EntityT>
auto* find_essential_impl(EntityT& entity, std::string_view name) {
  decltype(&entity.essentials.front()) none = nullptr;
  for (auto& e : entity.essentials) {
    if (e.name == name) return &e;
  }
  return none;
}

bool locate_impl(const Entity& node, const Entity* parent, std::string_view id, EntityPath& path,
                 EntityLocation& out) {
  if (node.id == id) {
    out.entity = &node;
    out.parent = parent;
    out.path = path;
    out.depth = path.size();
    return true;
  }
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    path.push_back(i);
    if (locate_impl(node.children[i], &node, id, path, out)) return true;
    path.pop_back();
  }
  return false;
}

void visit_impl(const Entity& node, const Entity* parent, std::size_t depth,
                const std::function<void(const Entity&, const Entity*, std::size_t)>& fn) {
  fn(node, parent, depth);
  for (const auto& child : node.children) visit_impl(child, &node, depth + 1, fn);
}

}  // namespace

std::string_view to_string(ValueType type) {
  for (const auto& [t, name] : kValueTypeNames) {
    if (t == type) return name;
  }
  return "String";
}

std::optional<ValueType> value_type_from_string(std::string_view name) {
  for (const auto& [t, n] : kValueTypeNames) {
    if (n == name) return t;
  }
  return std::nullopt;
}

bool CompositeNode::operator==(const CompositeNode& other) const {
  return name == other.name && text == other.text && children == other.children;
}

TypedValue TypedValue::decimal(std::string text) { return {ValueType::Decimal, std::move(text), {}}; }
TypedValue TypedValue::integer(std::string text) { return {ValueType::Integer, std::move(text), {}}; }
TypedValue TypedValue::boolean(bool value) { return {ValueType::Boolean, value ? "true" : "false", {}}; }
TypedValue TypedValue::string(std::string text) { return {ValueType::String, std::move(text), {}}; }
TypedValue TypedValue::token(std::string text) { return {ValueType::EnumToken, std::move(text), {}}; }
TypedValue TypedValue::compound(std::vector<CompositeNode> nodes) {
  return {ValueType::Composite, {}, std::move(nodes)};
}

std::string TypedValue::display() const {
  if (type != ValueType::Composite) return scalar;
  std::string out;
  display_nodes(composite, out);
  return out;
}

std::optional<std::string> payload_problem(const TypedValue& value) {
  const std::string& s = value.scalar;
  if (value.type != ValueType::Composite && !value.composite.empty()) {
    return "scalar value carries composite elements";
  }
  switch (value.type) {
    case ValueType::Decimal:
      if (!is_decimal_text(s)) return "'" + s + "' is not a Decimal";
      break;
    case ValueType::Integer:
      if (!is_integer_text(s)) return "'" + s + "' is not an Integer";
      break;
    case ValueType::Boolean:
      if (s != "true" && s != "false") return "'" + s + "' is not a Boolean (true|false)";
      break;
    case ValueType::EnumToken:
      if (!is_token_text(s)) return "'" + s + "' is not an EnumToken ([A-Za-z0-9_]+)";
      break;
    case ValueType::String:
      break;
    case ValueType::Composite:
      if (!s.empty()) return "Composite value carries scalar text";
      for (const auto& node : value.composite) {
        if (auto problem = node_problem(node)) return problem;
      }
      break;
  }
  return std::nullopt;
}

const Essential* Entity::find_essential(std::string_view essential_name) const {
  return find_essential_impl(*this, essential_name);
}

Essential* Entity::find_essential(std::string_view essential_name) {
  return find_essential_impl(*this, essential_name);
}

bool Entity::operator==(const Entity& other) const {
  return id == other.id && name == other.name && entity_type == other.entity_type &&
         essentials == other.essentials && children == other.children;
}

std::optional<EntityLocation> locate(const ProtocolDocument& doc, std::string_view id) {
  EntityLocation out;
  EntityPath path;
  if (locate_impl(doc.root, nullptr, id, path, out)) return out;
  return std::nullopt;
}

const Entity* find_entity(const ProtocolDocument& doc, std::string_view id) {
  auto loc = locate(doc, id);
  return loc ? loc->entity : nullptr;
}

Entity& entity_at(Entity& root, const EntityPath& path) {
  Entity* node = &root;
  for (auto index : path) node = &node->children.at(index);
  return *node;
}

const Entity& entity_at(const Entity& root, const EntityPath& path) {
  const Entity* node = &root;
  for (auto index : path) node = &node->children.at(index);
  return *node;
}

std::string id_path(const ProtocolDocument& doc, std::string_view id) {
  auto loc = locate(doc, id);
  if (!loc) return {};
  std::string out = doc.root.id;
  const Entity* node = &doc.root;
  for (auto index : loc->path) {
    node = &node->children[index];
    out += "/" + node->id;
  }
  return out;
}

std::size_t entity_count(const Entity& root) {
  std::size_t n = 1;
  for (const auto& child : root.children) n += entity_count(child);
  return n;
}

void visit_preorder(const Entity& root,
                    const std::function<void(const Entity&, const Entity*, std::size_t)>& fn) {
  visit_impl(root, nullptr, 0, fn);
}

std::vector<std::string> collect_ids(const Entity& root) {
  std::vector<std::string> ids;
  visit_preorder(root, [&](const Entity& e, const Entity*, std::size_t) { ids.push_back(e.id); });
  return ids;
}

}  // namespace protoagent
