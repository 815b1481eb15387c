#include "protoagent/protocol/codec.hpp"

#include <set>

#include "protoagent/protocol/vocabulary.hpp"
#include "protoagent/protocol/xml.hpp"

namespace protoagent {
namespace {

constexpr std::string_view kDeclaration = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";

class SchemaReader {
 public:
  explicit SchemaReader(const ParseOptions& options)
      : strict_(options.strict),
        vocabulary_(options.vocabulary ? *options.vocabulary : Vocabulary::builtin()) {}

  ProtocolDocument read(const xml::Node& root) {
    ProtocolDocument doc;
    if (root.name != kRootEntityType) {
      fail("BAD_ROOT", "", "root element must be <ScanProtocol>, found <" + root.name + ">", root.location);
    }
    check_attributes(root, {"id", "name", "schemaVersion"}, "");
    const std::string* version = root.attribute("schemaVersion");
    if (version && *version != kSchemaVersion) {
      fail("UNSUPPORTED_VERSION", "", "schemaVersion '" + *version + "' is not supported", root.location);
    }
    doc.schema_version = version ? *version : std::string(kSchemaVersion);
    doc.root = read_entity(root, "", true);
    return doc;
  }

  ValidationReport report;

 private:
  void fail(std::string code, std::string path, std::string message, TextLocation loc,
            Severity severity = Severity::Error) {
    report.add({severity, std::move(code), std::move(path), std::move(message), loc});
  }

  void check_attributes(const xml::Node& node, std::initializer_list<std::string_view> allowed,
                        const std::string& path) {
    for (const auto& [key, _] : node.attributes) {
      bool known = false;
      for (auto a : allowed) known = known || key == a;
      if (!known) {
        fail("UNKNOWN_ATTRIBUTE", path, "attribute '" + key + "' is not allowed on <" + node.name + ">",
             node.location);
      }
    }
    for (auto a : allowed) {
      const std::string* value = node.attribute(a);
      if (!value) {
        fail("MISSING_ATTRIBUTE", path, "<" + node.name + "> requires attribute '" + std::string(a) + "'",
             node.location);
      } else if (value->empty()) {
        fail("EMPTY_ATTRIBUTE", path, "attribute '" + std::string(a) + "' must not be empty", node.location);
      }
    }
  }

  Entity read_entity(const xml::Node& node, const std::string& parent_path, bool is_root) {
    Entity entity;
    auto attr = [&](std::string_view key) {
      const std::string* v = node.attribute(key);
      return v ? *v : std::string();
    };
    entity.id = attr("id");
    entity.name = attr("name");
    entity.entity_type = is_root ? std::string(kRootEntityType) : attr("type");
    std::string path = parent_path.empty() ? entity.id : parent_path + "/" + entity.id;
    if (entity.id.empty()) path += "<line " + std::to_string(node.location.line) + ">";

    if (!is_root) {
      check_attributes(node, {"id", "name", "type"}, path);
      if (entity.entity_type == kRootEntityType) {
        fail("BAD_TYPE", path, "only the root may have type ScanProtocol", node.location);
      } else if (!entity.entity_type.empty() && !vocabulary_.has_type(entity.entity_type)) {
        fail("UNKNOWN_TYPE", path, "entity type '" + entity.entity_type + "' is not registered",
             node.location, strict_ ? Severity::Error : Severity::Warning);
      }
    }
    if (!entity.id.empty() && !seen_ids_.insert(entity.id).second) {
      fail("DUPLICATE_ID", path, "entity id '" + entity.id + "' is not unique", node.location);
    }
    if (node.has_text) fail("UNEXPECTED_TEXT", path, "entities do not carry text", node.location);

    std::set<std::string> essential_names;
    for (const auto& child : node.children) {
      if (child.name == "Essential") {
        auto essential = read_essential(child, path);
        if (!essential.name.empty() && !essential_names.insert(essential.name).second) {
          fail("DUPLICATE_ESSENTIAL", path, "essential '" + essential.name + "' appears twice",
               child.location);
        }
        entity.essentials.push_back(std::move(essential));
      } else if (child.name == "Entity") {
        entity.children.push_back(read_entity(child, path, false));
      } else {
        fail("UNKNOWN_ELEMENT", path, "element <" + child.name + "> is not allowed in an entity",
             child.location);
      }
    }
    return entity;
  }

  Essential read_essential(const xml::Node& node, const std::string& path) {
    Essential essential;
    check_attributes(node, {}, path);
    if (node.has_text) fail("UNEXPECTED_TEXT", path, "<Essential> does not carry text", node.location);
    const xml::Node* name = nullptr;
    const xml::Node* value = nullptr;
    for (const auto& child : node.children) {
      const xml::Node** slot = child.name == "Name" ? &name : child.name == "Value" ? &value : nullptr;
      if (!slot) {
        fail("UNKNOWN_ELEMENT", path, "element <" + child.name + "> is not allowed in <Essential>",
             child.location);
      } else if (*slot) {
        fail("DUPLICATE_ELEMENT", path, "<Essential> has more than one <" + child.name + ">", child.location);
      } else {
        *slot = &child;
      }
    }
    if (!name || !value) {
      fail("MISSING_ELEMENT", path, "<Essential> requires <Name> and <Value>", node.location);
      return essential;
    }
    check_attributes(*name, {}, path);
    if (!name->children.empty()) fail("UNKNOWN_ELEMENT", path, "<Name> must be plain text", name->location);
    if (name->text.empty()) fail("EMPTY_NAME", path, "essential name must not be empty", name->location);
    essential.name = name->text;
    std::string essential_path = path + "#" + essential.name;

    check_attributes(*value, {"type"}, essential_path);
    const std::string* tag = value->attribute("type");
    auto type = tag ? value_type_from_string(*tag) : std::nullopt;
    if (tag && !tag->empty() && !type) {
      fail("UNKNOWN_VALUE_TYPE", essential_path, "value type '" + *tag + "' is not supported", value->location);
      return essential;
    }
    if (!type) return essential;
    essential.value.type = *type;
    if (*type == ValueType::Composite) {
      if (value->has_text) {
        fail("MIXED_CONTENT", essential_path, "Composite values hold elements only", value->location);
      }
      for (const auto& child : value->children) {
        essential.value.composite.push_back(read_node(child, essential_path));
      }
    } else {
      if (!value->children.empty()) {
        fail("INVALID_VALUE", essential_path, std::string(to_string(*type)) + " values cannot hold elements",
             value->location);
      }
      essential.value.scalar = value->text;
    }
    if (auto problem = payload_problem(essential.value)) {
      fail("INVALID_VALUE", essential_path, *problem, value->location);
    }
    return essential;
  }

  CompositeNode read_node(const xml::Node& node, const std::string& path) {
    CompositeNode out;
    out.name = node.name;
    check_attributes(node, {}, path);
    if (node.children.empty()) {
      out.text = node.text;
      return out;
    }
    if (node.has_text) {
      fail("MIXED_CONTENT", path, "<" + node.name + "> mixes text and elements", node.location);
    }
    for (const auto& child : node.children) out.children.push_back(read_node(child, path));
    return out;
  }

  bool strict_;
  const Vocabulary& vocabulary_;
  std::set<std::string> seen_ids_;
};

void pad(std::string& out, int indent) { out.append(static_cast<std::size_t>(indent), ' '); }

void write_node(std::string& out, const CompositeNode& node, int indent) {
  pad(out, indent);
  if (node.children.empty()) {
    if (node.text.empty()) {
      out += "<" + node.name + "/>\n";
    } else {
      out += "<" + node.name + ">" + xml::escape_text(node.text) + "</" + node.name + ">\n";
    }
    return;
  }
  out += "<" + node.name + ">\n";
  for (const auto& child : node.children) write_node(out, child, indent + 2);
  pad(out, indent);
  out += "</" + node.name + ">\n";
}

void write_essential(std::string& out, const Essential& essential, int indent) {
  pad(out, indent);
  out += "<Essential>\n";
  pad(out, indent + 2);
  out += "<Name>" + xml::escape_text(essential.name) + "</Name>\n";
  pad(out, indent + 2);
  const TypedValue& v = essential.value;
  std::string open = "<Value type=\"" + std::string(to_string(v.type)) + "\"";
  if (v.type == ValueType::Composite) {
    if (v.composite.empty()) {
      out += open + "/>\n";
    } else {
      out += open + ">\n";
      for (const auto& node : v.composite) write_node(out, node, indent + 4);
      pad(out, indent + 2);
      out += "</Value>\n";
    }
  } else if (v.scalar.empty()) {
    out += open + "/>\n";
  } else {
    out += open + ">" + xml::escape_text(v.scalar) + "</Value>\n";
  }
  pad(out, indent);
  out += "</Essential>\n";
}

void write_entity(std::string& out, const Entity& entity, int indent, const std::string* schema_version,
                  bool include_children) {
  const bool is_root = entity.entity_type == kRootEntityType;
  const std::string element = is_root ? std::string(kRootEntityType) : "Entity";
  pad(out, indent);
  out += "<" + element + " id=\"" + xml::escape_attribute(entity.id) + "\" name=\"" +
         xml::escape_attribute(entity.name) + "\"";
  if (is_root) {
    if (schema_version) out += " schemaVersion=\"" + xml::escape_attribute(*schema_version) + "\"";
  } else {
    out += " type=\"" + xml::escape_attribute(entity.entity_type) + "\"";
  }
  const bool has_children = include_children && !entity.children.empty();
  if (entity.essentials.empty() && !has_children) {
    out += "/>\n";
    return;
  }
  out += ">\n";
  for (const auto& essential : entity.essentials) write_essential(out, essential, indent + 2);
  if (has_children) {
    for (const auto& child : entity.children) write_entity(out, child, indent + 2, nullptr, true);
  }
  pad(out, indent);
  out += "</" + element + ">\n";
}

Issue first_error(const ValidationReport& report) {
  for (const auto& issue : report.issues) {
    if (issue.severity == Severity::Error) return issue;
  }
  return {};
}

}  // namespace

ProtocolDocument parse_protocol(std::string_view xml_text, const ParseOptions& options) {
  xml::Node root = xml::parse(xml_text);
  SchemaReader reader(options);
  ProtocolDocument doc = reader.read(root);
  if (!reader.report.ok) {
    Issue issue = first_error(reader.report);
    throw Error(ErrorCode::SchemaError, issue.code + ": " + issue.message, issue.path, issue.location);
  }
  return doc;
}

std::string serialize_protocol(const ProtocolDocument& doc) {
  std::string out(kDeclaration);
  write_entity(out, doc.root, 0, &doc.schema_version, true);
  return out;
}

std::string serialize_entity(const Entity& entity, bool include_children) {
  std::string out;
  write_entity(out, entity, 0, nullptr, include_children);
  return out;
}

std::string serialize_essential(const Essential& essential, int indent) {
  std::string out;
  write_essential(out, essential, indent);
  return out;
}

ValidationReport validate_syntax(std::string_view xml_text, const ParseOptions& options) {
  ValidationReport report;
  xml::Node root;
  try {
    root = xml::parse(xml_text);
  } catch (const Error& e) {
    report.add({Severity::Error, "SYNTAX_ERROR", "", e.message(), e.location()});
    return report;
  }
  SchemaReader reader(options);
  reader.read(root);
  return reader.report;
}

}  // namespace protoagent
