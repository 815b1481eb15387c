#pragma once

#include <string>
#include <string_view>

#include "protoagent/protocol/document.hpp"
#include "protoagent/protocol/validation.hpp"

namespace protoagent {

class Vocabulary;

struct ParseOptions {
  bool strict = false;                    // unknown entity types become errors
  const Vocabulary* vocabulary = nullptr; // builtin when null
};

/// Throws Error(SyntaxError) or Error(SchemaError); the first error found is
/// reported with its line/column and entity path.
ProtocolDocument parse_protocol(std::string_view xml_text, const ParseOptions& options = {});

/// Canonical form: XML declaration, 2-space indentation, attributes in the
/// order id, name, type, trailing newline.
std::string serialize_protocol(const ProtocolDocument& doc);

/// Canonical rendering of one entity subtree starting at column 0, without an
/// XML declaration. Used for affected-segment comparison and prompts.
std::string serialize_entity(const Entity& entity, bool include_children = true);

std::string serialize_essential(const Essential& essential, int indent = 0);

/// Stand-in for a device-side protocol browser: the text must parse and pass
/// every schema check. Never throws.
ValidationReport validate_syntax(std::string_view xml_text, const ParseOptions& options = {});

}  // namespace protoagent
