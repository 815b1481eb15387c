#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "protoagent/error.hpp"

namespace protoagent::xml {

/// Minimal element tree produced by the parser. Character data is
/// concatenated per element; `has_text` is true when any of it is
/// non-whitespace.
struct Node {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::string text;
  bool has_text = false;
  std::vector<Node> children;
  TextLocation location;

  const std::string* attribute(std::string_view key) const;
};

/// Throws Error(SyntaxError) with a line/column on malformed input. DOCTYPE
/// declarations are rejected.
Node parse(std::string_view text);

std::string escape_text(std::string_view raw);
std::string escape_attribute(std::string_view raw);

}  // namespace protoagent::xml
