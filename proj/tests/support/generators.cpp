#include "support/generators.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace protoagent::testkit {
namespace {

const std::vector<std::string> kLeafTypes = {
    "FrameOfReferenceEntity", "TopogramRangeEntity", "SpiralRangeEntity", "AcquisitionUnitEntity",
    "CTReconEntity",          "PostProcessingEntity"};
const std::vector<std::string> kCompoundTypes = {"StandardReconCompoundEntity",
                                                 "OrientedReconCompoundEntity"};

// Pieces that exercise escaping and multibyte UTF-8.
const std::vector<std::string> kTextPieces = {"Br40", "thorax", " ", "a&b", "<x>", "\"q\"", "it's",
                                              "\xC3\xBC", "\xE2\x86\x92", "1.0 mm", "\t", "\n", "]]",
                                              "&amp;", "\r"};

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

bool coin(std::mt19937_64& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

std::string random_text(std::mt19937_64& rng, std::size_t max_pieces, bool allow_empty) {
  std::size_t n = pick(rng, max_pieces + 1);
  if (n == 0 && !allow_empty) n = 1;
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += kTextPieces[pick(rng, kTextPieces.size())];
  return out;
}

std::string random_token(std::mt19937_64& rng) {
  static const std::string chars = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_";
  std::string out;
  std::size_t n = 1 + pick(rng, 10);
  for (std::size_t i = 0; i < n; ++i) out += chars[pick(rng, chars.size())];
  return out;
}

std::string random_node_name(std::mt19937_64& rng) {
  static const std::vector<std::string> names = {"Position", "Current", "PositionsWithCurrents",
                                                 "Segment", "Weight", "x-ray.level", "_tag"};
  return names[pick(rng, names.size())];
}

CompositeNode random_node(std::mt19937_64& rng, int depth) {
  CompositeNode node;
  node.name = random_node_name(rng);
  if (depth < 3 && coin(rng, 0.4)) {
    std::size_t n = 1 + pick(rng, 3);
    for (std::size_t i = 0; i < n; ++i) node.children.push_back(random_node(rng, depth + 1));
  } else {
    node.text = random_text(rng, 3, true);
  }
  return node;
}

TypedValue random_value(std::mt19937_64& rng) {
  switch (pick(rng, 6)) {
    case 0: {
      std::string s = std::to_string(pick(rng, 2000)) + "." + std::to_string(pick(rng, 100));
      if (coin(rng, 0.2)) s = "-" + s;
      if (coin(rng, 0.1)) s += "e" + std::to_string(pick(rng, 5));
      return TypedValue::decimal(s);
    }
    case 1:
      return TypedValue::integer((coin(rng, 0.2) ? "-" : "") + std::to_string(pick(rng, 100000)));
    case 2:
      return TypedValue::boolean(coin(rng));
    case 3:
      return TypedValue::string(random_text(rng, 4, true));
    case 4:
      return TypedValue::token(random_token(rng));
    default: {
      std::vector<CompositeNode> nodes;
      std::size_t n = pick(rng, 3);
      for (std::size_t i = 0; i < n; ++i) nodes.push_back(random_node(rng, 0));
      return TypedValue::compound(std::move(nodes));
    }
  }
}

void add_essentials(Entity& e, std::mt19937_64& rng) {
  std::size_t n = pick(rng, 4);
  for (std::size_t i = 0; i < n; ++i) {
    Essential essential;
    essential.name = "Param" + std::to_string(i) + (coin(rng, 0.3) ? "&Essential" : "Essential");
    essential.value = random_value(rng);
    e.essentials.push_back(std::move(essential));
  }
}

// --- independent writer ----------------------------------------------------

std::string escape_random(std::string_view raw, std::mt19937_64& rng, bool attribute, char quote) {
  std::string out;
  for (char c : raw) {
    if (c == '&') {
      out += coin(rng) ? "&amp;" : "&#38;";
    } else if (c == '<') {
      out += coin(rng) ? "&lt;" : "&#x3C;";
    } else if (c == '>') {
      out += coin(rng) ? "&gt;" : ">";
    } else if (c == '\r') {
      out += "&#xD;";
    } else if (attribute && (c == '\n' || c == '\t')) {
      out += c == '\n' ? "&#xA;" : "&#9;";
    } else if (attribute && c == quote) {
      out += quote == '"' ? "&quot;" : "&apos;";
    } else if (!attribute && c == '"' && coin(rng, 0.3)) {
      out += "&quot;";
    } else {
      out += c;
    }
  }
  return out;
}

std::string text_content(std::string_view raw, std::mt19937_64& rng) {
  bool cdata_safe = raw.find("]]>") == std::string_view::npos && raw.find('\r') == std::string_view::npos;
  if (!raw.empty() && cdata_safe && coin(rng, 0.25)) return "<![CDATA[" + std::string(raw) + "]]>";
  return escape_random(raw, rng, false, '"');
}

std::string gap(std::mt19937_64& rng) {
  switch (pick(rng, 5)) {
    case 0: return "";
    case 1: return "\n";
    case 2: return "   ";
    case 3: return "\n\t <!-- note -->\n";
    default: return "\r\n  ";
  }
}

std::string open_tag(const std::string& element, std::vector<std::pair<std::string, std::string>> attrs,
                     std::mt19937_64& rng) {
  std::shuffle(attrs.begin(), attrs.end(), rng);
  std::string out = "<" + element;
  for (const auto& [k, v] : attrs) {
    char q = coin(rng) ? '"' : '\'';
    out += (coin(rng, 0.2) ? "\n  " : " ") + k + (coin(rng, 0.2) ? " = " : "=") + q +
           escape_random(v, rng, true, q) + q;
  }
  return out;
}

void write_node(std::string& out, const CompositeNode& node, std::mt19937_64& rng) {
  out += open_tag(node.name, {}, rng);
  if (node.children.empty()) {
    if (node.text.empty() && coin(rng)) {
      out += "/>";
    } else {
      out += ">" + text_content(node.text, rng) + "</" + node.name + ">";
    }
    return;
  }
  out += ">";
  for (const auto& child : node.children) {
    out += gap(rng);
    write_node(out, child, rng);
  }
  out += gap(rng) + "</" + node.name + ">";
}

void write_essential(std::string& out, const Essential& essential, std::mt19937_64& rng) {
  static const char* kTags[] = {"Decimal", "Integer", "Boolean", "String", "EnumToken", "Composite"};
  std::string name = "<Name>" + text_content(essential.name, rng) + "</Name>";
  std::string value = open_tag("Value", {{"type", kTags[static_cast<int>(essential.value.type)]}}, rng);
  if (essential.value.type == ValueType::Composite) {
    value += ">";
    for (const auto& node : essential.value.composite) {
      value += gap(rng);
      write_node(value, node, rng);
    }
    value += gap(rng) + "</Value>";
  } else if (essential.value.scalar.empty() && coin(rng)) {
    value += "/>";
  } else {
    value += ">" + text_content(essential.value.scalar, rng) + "</Value>";
  }
  out += "<Essential>" + gap(rng);
  out += coin(rng) ? name + gap(rng) + value : value + gap(rng) + name;
  out += gap(rng) + "</Essential>";
}

void write_entity(std::string& out, const Entity& e, const std::string* version, std::mt19937_64& rng) {
  std::string element = version ? "ScanProtocol" : "Entity";
  std::vector<std::pair<std::string, std::string>> attrs = {{"id", e.id}, {"name", e.name}};
  if (version) {
    attrs.emplace_back("schemaVersion", *version);
  } else {
    attrs.emplace_back("type", e.entity_type);
  }
  out += open_tag(element, attrs, rng);
  if (e.essentials.empty() && e.children.empty() && coin(rng)) {
    out += (coin(rng) ? " />" : "/>");
    return;
  }
  out += ">";
  // Interleave essentials and children, keeping each list's order.
  std::size_t i = 0, j = 0;
  while (i < e.essentials.size() || j < e.children.size()) {
    out += gap(rng);
    bool take_essential = j == e.children.size() || (i < e.essentials.size() && coin(rng));
    if (take_essential) {
      write_essential(out, e.essentials[i++], rng);
    } else {
      write_entity(out, e.children[j++], nullptr, rng);
    }
  }
  out += gap(rng) + "</" + element + ">";
}

}  // namespace

ProtocolDocument random_document(std::mt19937_64& rng, const TreeShape& shape) {
  ProtocolDocument doc;
  doc.root.id = "root";
  doc.root.name = "Generated " + random_text(rng, 2, false);
  doc.root.entity_type = std::string(kRootEntityType);
  if (coin(rng, 0.2)) add_essentials(doc.root, rng);

  const std::size_t total = 1 + pick(rng, shape.max_entities);
  std::vector<EntityPath> paths{{}};
  for (std::size_t k = 1; k < total; ++k) {
    EntityPath parent_path = paths[pick(rng, paths.size())];
    Entity& parent = entity_at(doc.root, parent_path);
    Entity child;
    child.id = "e" + std::to_string(k) + (coin(rng, 0.15) ? "&<\"x\xC3\xA9" : "");
    child.name = random_text(rng, 3, false);
    child.entity_type = coin(rng, shape.compound_ratio) ? kCompoundTypes[pick(rng, kCompoundTypes.size())]
                                                        : kLeafTypes[pick(rng, kLeafTypes.size())];
    add_essentials(child, rng);
    parent.children.push_back(std::move(child));
    EntityPath child_path = parent_path;
    child_path.push_back(parent.children.size() - 1);
    paths.push_back(std::move(child_path));
  }
  if (shape.no_empty_compounds) {
    std::function<void(Entity&)> fix = [&](Entity& e) {
      for (auto& c : e.children) fix(c);
      bool compound = std::find(kCompoundTypes.begin(), kCompoundTypes.end(), e.entity_type) !=
                      kCompoundTypes.end();
      if (compound && e.children.empty()) e.entity_type = "CTReconEntity";
    };
    fix(doc.root);
  }
  return doc;
}

std::string noncanonical_xml(const ProtocolDocument& doc, std::mt19937_64& rng) {
  std::string out;
  if (coin(rng)) out += coin(rng) ? "<?xml version='1.0' encoding='UTF-8'?>" : "<?xml version=\"1.0\"?>\n";
  if (coin(rng, 0.3)) out += "<!-- generated -->\n";
  write_entity(out, doc.root, &doc.schema_version, rng);
  out += gap(rng);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fixture_path(std::string_view relative) {
  return std::string(PROTOAGENT_SOURCE_DIR) + "/fixtures/" + std::string(relative);
}

std::string read_fixture(std::string_view relative) { return read_file(fixture_path(relative)); }

}  // namespace protoagent::testkit
