#include "protoagent/protocol/xml.hpp"

#include <expat.h>

#include <memory>
#include <optional>

namespace protoagent::xml {
namespace {

struct ParserDeleter {
  void operator()(XML_Parser p) const { XML_ParserFree(p); }
};

struct BuildState {
  XML_Parser parser = nullptr;
  std::vector<Node*> stack;
  std::optional<Node> root;
  std::optional<std::string> abort_reason;
  TextLocation abort_location;

  TextLocation here() const {
    return {static_cast<std::size_t>(XML_GetCurrentLineNumber(parser)),
            static_cast<std::size_t>(XML_GetCurrentColumnNumber(parser)) + 1};
  }

  void abort(std::string reason) {
    abort_reason = std::move(reason);
    abort_location = here();
    XML_StopParser(parser, XML_FALSE);
  }
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

void on_start(void* data, const XML_Char* name, const XML_Char** attrs) {
  auto& st = *static_cast<BuildState*>(data);
  Node node;
  node.name = name;
  node.location = st.here();
  for (std::size_t i = 0; attrs[i] != nullptr; i += 2) {
    node.attributes.emplace_back(attrs[i], attrs[i + 1]);
  }
  if (st.stack.empty()) {
    st.root = std::move(node);
    st.stack.push_back(&*st.root);
  } else {
    Node* parent = st.stack.back();
    parent->children.push_back(std::move(node));
    st.stack.push_back(&parent->children.back());
  }
}

void on_end(void* data, const XML_Char*) {
  auto& st = *static_cast<BuildState*>(data);
  st.stack.pop_back();
}

void on_text(void* data, const XML_Char* s, int len) {
  auto& st = *static_cast<BuildState*>(data);
  if (st.stack.empty()) return;
  Node* node = st.stack.back();
  node->text.append(s, static_cast<std::size_t>(len));
  if (!node->has_text) {
    for (int i = 0; i < len; ++i) {
      if (!is_space(s[i])) {
        node->has_text = true;
        break;
      }
    }
  }
}

void on_doctype(void* data, const XML_Char*, const XML_Char*, const XML_Char*, int) {
  static_cast<BuildState*>(data)->abort("DOCTYPE declarations are not allowed");
}

void on_entity_decl(void* data, const XML_Char*, int, const XML_Char*, int, const XML_Char*,
                    const XML_Char*, const XML_Char*, const XML_Char*) {
  static_cast<BuildState*>(data)->abort("entity declarations are not allowed");
}

}  // namespace

const std::string* Node::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (k == key) return &v;
  }
  return nullptr;
}

Node parse(std::string_view text) {
  std::unique_ptr<XML_ParserStruct, ParserDeleter> parser(XML_ParserCreate("UTF-8"));
  if (!parser) throw Error(ErrorCode::SyntaxError, "cannot allocate XML parser");

  BuildState state;
  state.parser = parser.get();
  XML_SetUserData(parser.get(), &state);
  XML_SetElementHandler(parser.get(), on_start, on_end);
  XML_SetCharacterDataHandler(parser.get(), on_text);
  XML_SetStartDoctypeDeclHandler(parser.get(), on_doctype);
  XML_SetEntityDeclHandler(parser.get(), on_entity_decl);
  XML_SetParamEntityParsing(parser.get(), XML_PARAM_ENTITY_PARSING_NEVER);

  auto status = XML_Parse(parser.get(), text.data(), static_cast<int>(text.size()), XML_TRUE);
  if (state.abort_reason) {
    throw Error(ErrorCode::SyntaxError, *state.abort_reason, {}, state.abort_location);
  }
  if (status != XML_STATUS_OK) {
    TextLocation loc{static_cast<std::size_t>(XML_GetCurrentLineNumber(parser.get())),
                     static_cast<std::size_t>(XML_GetCurrentColumnNumber(parser.get())) + 1};
    std::string message = XML_ErrorString(XML_GetErrorCode(parser.get()));
    if (!state.stack.empty()) {
      const Node* open = state.stack.back();
      message += " (innermost open element <" + open->name + "> from line " +
                 std::to_string(open->location.line) + ")";
    }
    throw Error(ErrorCode::SyntaxError, message, {}, loc);
  }
  if (!state.root) throw Error(ErrorCode::SyntaxError, "document has no root element", {}, TextLocation{1, 1});
  return std::move(*state.root);
}

std::string escape_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '\r': out += "&#13;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string escape_attribute(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\t': out += "&#9;"; break;
      case '\n': out += "&#10;"; break;
      case '\r': out += "&#13;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace protoagent::xml
