#pragma once

#include <string>
#include <vector>

#include "protoagent/protocol/document.hpp"

namespace protoagent {

/// One line per entity, preorder, two spaces of indentation per depth level:
/// `entity_type | name | id`.
struct SimplifiedTree {
  std::vector<std::string> lines;

  std::string text() const;
  bool operator==(const SimplifiedTree&) const = default;
};

SimplifiedTree render_simplified_tree(const ProtocolDocument& doc);

}  // namespace protoagent
