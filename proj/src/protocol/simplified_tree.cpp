#include "protoagent/protocol/simplified_tree.hpp"

namespace protoagent {

std::string SimplifiedTree::text() const {
  std::string out;
  for (const auto& line : lines) out += line + "\n";
  return out;
}

SimplifiedTree render_simplified_tree(const ProtocolDocument& doc) {
  SimplifiedTree tree;
  visit_preorder(doc.root, [&](const Entity& e, const Entity*, std::size_t depth) {
    tree.lines.push_back(std::string(depth * 2, ' ') + e.entity_type + " | " + e.name + " | " + e.id);
  });
  return tree;
}

}  // namespace protoagent
